#include "vrhmm/surrogate.hpp"

#include <cmath>

namespace vrhmm {

double loss_g_t(const Emission& e, const PosteriorCache& cache, const Matrix& y, long t) {
  return emission_loss(e, y.row(t).transpose(), cache.gamma.row(t).transpose());
}

double loss_h_t(const RealizedTransitions& realized, const PosteriorCache& cache, long t) {
  double s = 0.0;
  if (t == 0) {
    const auto g0 = cache.gamma.row(0);
    for (Eigen::Index i = 0; i < g0.size(); ++i)
      if (g0[i] != 0.0) s -= g0[i] * std::log(realized.delta[i]);
  } else {
    const Matrix& xi = cache.xi[static_cast<std::size_t>(t)];
    const Matrix& gam = realized.at(t);
    for (Eigen::Index i = 0; i < xi.rows(); ++i)
      for (Eigen::Index j = 0; j < xi.cols(); ++j)
        if (xi(i, j) != 0.0) s -= xi(i, j) * std::log(gam(i, j));
  }
  return s;
}

double loss_f_t(const HmmParams& params, const RealizedTransitions& realized,
                const PosteriorCache& cache, const Matrix& y, long t) {
  return loss_g_t(params.emission, cache, y, t) + loss_h_t(realized, cache, t);
}

SplitGradient grad_f_t(const HmmParams& params, const RealizedTransitions& realized,
                       const PosteriorCache& cache, const Matrix& y, long t,
                       EpochMeter* meter) {
  SplitGradient g(params.theta_dim(), params.eta_dim());
  accumulate_theta_grad(params.emission, y.row(t).transpose(), cache.gamma.row(t).transpose(),
                        g.theta);
  if (t == 0)
    accumulate_delta_grad(params.transition, realized, cache.gamma.row(0).transpose(), g.eta);
  else
    accumulate_gamma_grad(params.transition, realized, t, cache.xi[static_cast<std::size_t>(t)],
                          g.eta);
  if (meter) meter->charge(1);
  return g;
}

double full_loss(const HmmParams& params, const RealizedTransitions& realized,
                 const PosteriorCache& cache, const Matrix& y) {
  const long T = cache.T();
  double s = 0.0;
  for (long t = 0; t < T; ++t) s += loss_f_t(params, realized, cache, y, t);
  return s / static_cast<double>(T);
}

SplitGradient full_grad(const HmmParams& params, const RealizedTransitions& realized,
                        const PosteriorCache& cache, const Matrix& y, EpochMeter* meter) {
  const long T = cache.T();
  SplitGradient acc(params.theta_dim(), params.eta_dim());
  for (long t = 0; t < T; ++t) acc += grad_f_t(params, realized, cache, y, t, nullptr);
  acc *= 1.0 / static_cast<double>(T);
  if (meter) meter->charge_full_pass();
  return acc;
}

}  // namespace vrhmm
