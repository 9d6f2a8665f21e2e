#include "vrhmm/transition.hpp"

#include <cmath>
#include <limits>

namespace vrhmm {

namespace {

// Softmax over the support set, max-shifted. Entries outside the support are
// exactly zero.
void masked_row_softmax(const Eigen::Ref<const Vector>& logits,
                        const std::vector<int>& support, Eigen::Ref<Vector> out) {
  out.setZero();
  double mx = -std::numeric_limits<double>::infinity();
  for (int j : support) mx = std::max(mx, logits[j]);
  double z = 0.0;
  for (int j : support) z += std::exp(logits[j] - mx);
  for (int j : support) out[j] = std::exp(logits[j] - mx) / z;
}

}  // namespace

TransitionLogits::TransitionLogits(int n)
    : eta_gamma(Matrix::Zero(n, n)),
      eta_delta(Vector::Zero(n)),
      mask(BoolMatrix::Constant(n, n, false)) {}

Matrix transition_from_logits(const TransitionLogits& eta) {
  const int n = eta.n();
  Matrix gamma = Matrix::Zero(n, n);
  std::vector<int> support;
  for (int i = 0; i < n; ++i) {
    support.clear();
    for (int j = 0; j < n; ++j)
      if (!eta.mask(i, j)) support.push_back(j);
    if (support.empty())
      throw ConfigError("transition row " + std::to_string(i) + " has an all-masked support");
    Vector row = eta.eta_gamma.row(i);
    Vector out(n);
    masked_row_softmax(row, support, out);
    gamma.row(i) = out;
  }
  return gamma;
}

Vector initial_from_logits(const TransitionLogits& eta) {
  const int n = eta.n();
  std::vector<int> support(n);
  for (int j = 0; j < n; ++j) support[j] = j;
  Vector out(n);
  masked_row_softmax(eta.eta_delta, support, out);
  return out;
}

Vector stationary_distribution(const Matrix& gamma) {
  const int n = static_cast<int>(gamma.rows());
  Eigen::EigenSolver<Matrix> es(gamma.transpose());
  const auto& vals = es.eigenvalues();
  int unit = -1;
  int n_unit = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(vals[i] - std::complex<double>(1.0, 0.0)) < 1e-9) {
      ++n_unit;
      unit = i;
    }
  }
  if (n_unit != 1)
    throw NumericError("no stationary distribution: chain is not ergodic (unit eigenvalue not simple)");
  Vector pi = es.eigenvectors().col(unit).real();
  if (pi.sum() < 0) pi = -pi;
  if ((pi.array() < -1e-10).any() || pi.minCoeff() < 1e-12)
    throw NumericError("no stationary distribution: chain is not ergodic (stationary vector not positive)");
  pi /= pi.sum();
  return pi;
}

DiveTransition::DiveTransition()
    : coarse(Eigen::Matrix3d::Zero()), delta(Eigen::Vector3d::Zero()) {
  fine.fill(Eigen::Matrix3d::Zero());
}

namespace {

// Fine-block row softmax: row j has support {j..2}, diagonal pinned 0.
Eigen::Matrix3d fine_from_logits(const Eigen::Matrix3d& eta) {
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  for (int j = 0; j < 3; ++j) {
    double mx = 0.0;  // pinned diagonal logit
    for (int k = j + 1; k < 3; ++k) mx = std::max(mx, eta(j, k));
    double z = std::exp(-mx);
    for (int k = j + 1; k < 3; ++k) z += std::exp(eta(j, k) - mx);
    g(j, j) = std::exp(-mx) / z;
    for (int k = j + 1; k < 3; ++k) g(j, k) = std::exp(eta(j, k) - mx) / z;
  }
  return g;
}

Eigen::Matrix3d coarse_from_logits(const Eigen::Matrix3d& eta) {
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i) {
    double mx = eta.row(i).maxCoeff();
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += std::exp(eta(i, k) - mx);
    for (int k = 0; k < 3; ++k) g(i, k) = std::exp(eta(i, k) - mx) / z;
  }
  return g;
}

Eigen::Vector3d coarse_delta_from_logits(const Eigen::Vector3d& eta) {
  double mx = eta.maxCoeff();
  Eigen::Vector3d e = (eta.array() - mx).exp();
  return e / e.sum();
}

}  // namespace

int n_states(const TransitionModel& m) {
  return std::visit(
      [](const auto& t) -> int {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HomogeneousTransition>)
          return t.logits.n();
        else
          return 9;
      },
      m);
}

int eta_free_count(const TransitionModel& m) {
  return std::visit(
      [](const auto& t) -> int {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HomogeneousTransition>) {
          const int n = t.logits.n();
          int c = n - 1;  // delta, first entry pinned
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (i != j && !t.logits.mask(i, j)) ++c;
          return c;
        } else {
          // 6 coarse off-diag + 3 per fine block strictly-upper + 2 delta
          return 6 + 9 + 2;
        }
      },
      m);
}

void pack_eta(const TransitionModel& m, Eigen::Ref<Vector> out) {
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        int k = 0;
        if constexpr (std::is_same_v<T, HomogeneousTransition>) {
          const int n = t.logits.n();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (i != j && !t.logits.mask(i, j)) out[k++] = t.logits.eta_gamma(i, j);
          for (int i = 1; i < n; ++i) out[k++] = t.logits.eta_delta[i];
        } else {
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              if (i != j) out[k++] = t.coarse(i, j);
          for (int b = 0; b < 3; ++b)
            for (int i = 0; i < 3; ++i)
              for (int j = i + 1; j < 3; ++j) out[k++] = t.fine[b](i, j);
          out[k++] = t.delta[1];
          out[k++] = t.delta[2];
        }
      },
      m);
}

void unpack_eta(TransitionModel& m, const Eigen::Ref<const Vector>& in) {
  std::visit(
      [&](auto& t) {
        using T = std::decay_t<decltype(t)>;
        int k = 0;
        if constexpr (std::is_same_v<T, HomogeneousTransition>) {
          const int n = t.logits.n();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (i != j && !t.logits.mask(i, j)) t.logits.eta_gamma(i, j) = in[k++];
          for (int i = 1; i < n; ++i) t.logits.eta_delta[i] = in[k++];
        } else {
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              if (i != j) t.coarse(i, j) = in[k++];
          for (int b = 0; b < 3; ++b)
            for (int i = 0; i < 3; ++i)
              for (int j = i + 1; j < 3; ++j) t.fine[b](i, j) = in[k++];
          t.delta[1] = in[k++];
          t.delta[2] = in[k++];
        }
      },
      m);
}

RealizedTransitions realize(const TransitionModel& m) {
  return std::visit(
      [](const auto& t) -> RealizedTransitions {
        using T = std::decay_t<decltype(t)>;
        RealizedTransitions r;
        if constexpr (std::is_same_v<T, HomogeneousTransition>) {
          r.delta = initial_from_logits(t.logits);
          r.gammas.push_back(transition_from_logits(t.logits));
        } else {
          Eigen::Matrix3d gc = coarse_from_logits(t.coarse);
          Eigen::Vector3d dc = coarse_delta_from_logits(t.delta);

          Matrix within = Matrix::Zero(9, 9);
          for (int b = 0; b < 3; ++b)
            within.block<3, 3>(3 * b, 3 * b) = fine_from_logits(t.fine[b]);

          // Gamma_c kron [[1,0,0],[1,0,0],[1,0,0]]: every dive begins in descent.
          Matrix between = Matrix::Zero(9, 9);
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              for (int j = 0; j < 3; ++j) between(3 * a + j, 3 * b) = gc(a, b);

          r.delta = Vector::Zero(9);
          for (int a = 0; a < 3; ++a) r.delta[3 * a] = dc[a];
          r.gammas.push_back(std::move(within));
          r.gammas.push_back(std::move(between));
          r.boundary = t.boundary.get();
        }
        return r;
      },
      m);
}

void accumulate_delta_grad(const TransitionModel& m, const RealizedTransitions& r,
                           const Eigen::Ref<const Vector>& gamma1, Eigen::Ref<Vector> g) {
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HomogeneousTransition>) {
          const int n = t.logits.n();
          int k = 0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (i != j && !t.logits.mask(i, j)) ++k;  // skip eta_gamma slots
          const double gsum = gamma1.sum();
          for (int i = 1; i < n; ++i) g[k + i - 1] += -(gamma1[i] - r.delta[i] * gsum);
        } else {
          // Coarse weights collapse onto the descent slots.
          Eigen::Vector3d gc;
          for (int a = 0; a < 3; ++a) gc[a] = gamma1[3 * a];
          Eigen::Vector3d dc;
          for (int a = 0; a < 3; ++a) dc[a] = r.delta[3 * a];
          const double gsum = gc.sum();
          const int base = 6 + 9;
          g[base + 0] += -(gc[1] - dc[1] * gsum);
          g[base + 1] += -(gc[2] - dc[2] * gsum);
        }
      },
      m);
}

void accumulate_gamma_grad(const TransitionModel& m, const RealizedTransitions& r,
                           long t_idx, const Matrix& xi, Eigen::Ref<Vector> g) {
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HomogeneousTransition>) {
          const int n = t.logits.n();
          const Matrix& gamma = r.gammas[0];
          int k = 0;
          for (int i = 0; i < n; ++i) {
            const double ri = xi.row(i).sum();
            for (int j = 0; j < n; ++j)
              if (i != j && !t.logits.mask(i, j)) {
                g[k++] += -(xi(i, j) - ri * gamma(i, j));
              }
          }
        } else {
          const bool between = (*t.boundary)[static_cast<std::size_t>(t_idx)];
          if (between) {
            // Collapse xi onto the coarse chain: target column is always the
            // destination type's descent slot.
            Eigen::Matrix3d xc = Eigen::Matrix3d::Zero();
            for (int a = 0; a < 3; ++a)
              for (int j = 0; j < 3; ++j)
                for (int b = 0; b < 3; ++b) xc(a, b) += xi(3 * a + j, 3 * b);
            Eigen::Matrix3d gc;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b) gc(a, b) = r.gammas[1](3 * a, 3 * b);
            int k = 0;
            for (int a = 0; a < 3; ++a) {
              const double ra = xc.row(a).sum();
              for (int b = 0; b < 3; ++b)
                if (a != b) g[k++] += -(xc(a, b) - ra * gc(a, b));
            }
          } else {
            int k = 6;
            for (int b = 0; b < 3; ++b) {
              for (int i = 0; i < 3; ++i) {
                double ri = 0.0;
                for (int j = i; j < 3; ++j) ri += xi(3 * b + i, 3 * b + j);
                for (int j = i + 1; j < 3; ++j) {
                  g[k++] += -(xi(3 * b + i, 3 * b + j) - ri * r.gammas[0](3 * b + i, 3 * b + j));
                }
              }
            }
          }
        }
      },
      m);
}

}  // namespace vrhmm
