#include "vrhmm/emission.hpp"

#include <cmath>
#include <limits>

namespace vrhmm {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 log(2 pi)
constexpr double kRhoFloor = -23.025850929940457;    // log(1e-10)

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log Bernoulli(e | sigmoid(x)), stable for large |x|
double log_bernoulli_logit(double e, double x) {
  return e > 0.5 ? -std::log1p(std::exp(-x)) : -std::log1p(std::exp(x));
}

double gauss_log_density(double y, double mu, double rho) {
  const double z = y - mu;
  return -kHalfLog2Pi - 0.5 * rho - 0.5 * z * z * std::exp(-rho);
}

}  // namespace

int n_states(const Emission& e) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>)
          return static_cast<int>(m.mean.rows());
        else
          return 9;
      },
      e);
}

int obs_dim(const Emission& e) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>)
          return static_cast<int>(m.mean.cols());
        else
          return 2;
      },
      e);
}

int theta_free_count(const Emission& e) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>) {
          const int nd = static_cast<int>(m.mean.size());
          return m.fix_variance ? nd : 2 * nd;
        } else {
          return 9 + 9 + 3;
        }
      },
      e);
}

void pack_theta(const Emission& e, Eigen::Ref<Vector> out) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        int k = 0;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>) {
          const int n = static_cast<int>(m.mean.rows());
          const int d = static_cast<int>(m.mean.cols());
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out[k++] = m.mean(i, j);
          if (!m.fix_variance)
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < d; ++j) out[k++] = m.log_var(i, j);
        } else {
          for (int i = 0; i < 9; ++i) out[k++] = m.mu[i];
          for (int i = 0; i < 9; ++i) out[k++] = m.rho[i];
          for (int i = 0; i < 3; ++i) out[k++] = m.logit_p[i];
        }
      },
      e);
}

void unpack_theta(Emission& e, const Eigen::Ref<const Vector>& in) {
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        int k = 0;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>) {
          const int n = static_cast<int>(m.mean.rows());
          const int d = static_cast<int>(m.mean.cols());
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) m.mean(i, j) = in[k++];
          if (!m.fix_variance)
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < d; ++j) m.log_var(i, j) = std::max(in[k++], kRhoFloor);
        } else {
          for (int i = 0; i < 9; ++i) m.mu[i] = in[k++];
          for (int i = 0; i < 9; ++i) m.rho[i] = std::max(in[k++], kRhoFloor);
          for (int i = 0; i < 3; ++i) m.logit_p[i] = in[k++];
        }
      },
      e);
}

void log_density_row(const Emission& e, const Eigen::Ref<const Vector>& y,
                     Eigen::Ref<Vector> out) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>) {
          const int n = static_cast<int>(m.mean.rows());
          const int d = static_cast<int>(m.mean.cols());
          for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += gauss_log_density(y[j], m.mean(i, j), m.log_var(i, j));
            out[i] = s;
          }
        } else {
          const double dep = y[0];
          const double end = y[1];
          for (int s = 0; s < 9; ++s) {
            const int type = s / 3;
            const int phase = s % 3;
            double lp = gauss_log_density(dep, m.mu[s], m.rho[s]);
            if (phase == 2) {
              lp += log_bernoulli_logit(end, m.logit_p[type]);
            } else if (end > 0.5) {
              lp = -std::numeric_limits<double>::infinity();
            }
            out[s] = lp;
          }
        }
      },
      e);
}

void accumulate_theta_grad(const Emission& e, const Eigen::Ref<const Vector>& y,
                           const Eigen::Ref<const Vector>& gamma, Eigen::Ref<Vector> g) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiagGaussianEmission>) {
          const int n = static_cast<int>(m.mean.rows());
          const int d = static_cast<int>(m.mean.cols());
          for (int i = 0; i < n; ++i) {
            const double w = gamma[i];
            for (int j = 0; j < d; ++j) {
              const double z = y[j] - m.mean(i, j);
              const double inv_var = std::exp(-m.log_var(i, j));
              g[i * d + j] += -w * z * inv_var;
              if (!m.fix_variance)
                g[n * d + i * d + j] += w * 0.5 * (1.0 - z * z * inv_var);
            }
          }
        } else {
          const double dep = y[0];
          const double end = y[1];
          for (int s = 0; s < 9; ++s) {
            const double w = gamma[s];
            const double z = dep - m.mu[s];
            const double inv_var = std::exp(-m.rho[s]);
            g[s] += -w * z * inv_var;
            g[9 + s] += w * 0.5 * (1.0 - z * z * inv_var);
            if (s % 3 == 2) {
              const int type = s / 3;
              g[18 + type] += -w * (end - sigmoid(m.logit_p[type]));
            }
          }
        }
      },
      e);
}

double emission_loss(const Emission& e, const Eigen::Ref<const Vector>& y,
                     const Eigen::Ref<const Vector>& gamma) {
  const int n = n_states(e);
  Vector lp(n);
  log_density_row(e, y, lp);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    if (gamma[i] != 0.0) s -= gamma[i] * lp[i];
  return s;
}

}  // namespace vrhmm
