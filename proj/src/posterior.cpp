#include "vrhmm/posterior.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace vrhmm {

namespace {

// The full pass and the partial (single-index) update below share these
// kernels, so a partial update at parameters equal to those of the last full
// pass reproduces its output bitwise.

// Shifted densities p[i] = f_i(y_t) / exp(shift). Structural zeros stay
// exactly 0; throws if every state has zero density.
double shifted_densities(const Emission& e, const Eigen::Ref<const Vector>& y,
                         Vector& p, long t) {
  log_density_row(e, y, p);
  const double shift = p.maxCoeff();
  if (!std::isfinite(shift))
    throw NumericError("observation at index " + std::to_string(t) +
                       " has zero density in every state");
  // Scalar exp: Eigen's vectorized exp clamps -inf to the smallest finite
  // argument, which would leak denormal mass into structurally zero states.
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::exp(p[i] - shift);
  return shift;
}

// One scaled forward step; returns the normalizer before the density shift.
double forward_step(const Eigen::Ref<const Vector>& alpha_prev, const Matrix& gamma,
                    const Vector& p, Eigen::Ref<Vector> alpha_out) {
  alpha_out = (gamma.transpose() * alpha_prev).cwiseProduct(p);
  const double c = alpha_out.sum();
  alpha_out /= c;
  return c;
}

double forward_first(const Vector& delta, const Vector& p, Eigen::Ref<Vector> alpha_out) {
  alpha_out = delta.cwiseProduct(p);
  const double c = alpha_out.sum();
  alpha_out /= c;
  return c;
}

void backward_step(const Matrix& gamma_next, const Vector& p_next,
                   const Eigen::Ref<const Vector>& beta_next, Eigen::Ref<Vector> beta_out) {
  beta_out = gamma_next * p_next.cwiseProduct(beta_next);
  beta_out /= beta_out.sum();
}

void backward_last(Eigen::Ref<Vector> beta_out) {
  beta_out.setOnes();
  beta_out /= beta_out.sum();
}

void marginal_weights(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                      Eigen::Ref<Vector> gamma_out) {
  gamma_out = a.cwiseProduct(b);
  gamma_out /= gamma_out.sum();
}

void pair_weights(const Eigen::Ref<const Vector>& a_prev, const Matrix& gamma,
                  const Vector& p, const Eigen::Ref<const Vector>& b, Matrix& xi_out) {
  xi_out = a_prev * p.cwiseProduct(b).transpose();
  xi_out = xi_out.cwiseProduct(gamma);
  xi_out /= xi_out.sum();
}

void check_boundary(const RealizedTransitions& r, long t_len) {
  if (r.gammas.size() > 1 &&
      (r.boundary == nullptr || static_cast<long>(r.boundary->size()) != t_len))
    throw ConfigError("dive model needs a boundary sequence matching the data length");
}

}  // namespace

PosteriorCache e_step(const HmmParams& params, const Matrix& y, EpochMeter* meter) {
  const long T = y.rows();
  const int N = params.n_states();
  if (T < 1) throw DataError("empty observation sequence");
  if (y.cols() != obs_dim(params.emission)) throw DataError("observation dimension mismatch");

  const RealizedTransitions realized = realize(params.transition);
  check_boundary(realized, T);

  PosteriorCache c;
  c.alpha_hat.resize(T, N);
  c.beta_hat.resize(T, N);
  c.gamma.resize(T, N);
  c.log_c.resize(T);
  c.xi.resize(static_cast<std::size_t>(T));

  RowMatrix dens(T, N);
  Vector shifts(T);
  Vector p(N);
  for (long t = 0; t < T; ++t) {
    shifts[t] = shifted_densities(params.emission, y.row(t).transpose(), p, t);
    dens.row(t) = p.transpose();
  }

  p = dens.row(0).transpose();
  c.log_c[0] = std::log(forward_first(realized.delta, p, c.alpha_hat.row(0).transpose())) + shifts[0];
  for (long t = 1; t < T; ++t) {
    p = dens.row(t).transpose();
    c.log_c[t] = std::log(forward_step(c.alpha_hat.row(t - 1).transpose(), realized.at(t), p,
                                       c.alpha_hat.row(t).transpose())) +
                 shifts[t];
  }
  // Sequential accumulation, term order identical to log_likelihood so the
  // two agree bitwise at the same parameters (the M-step acceptance test
  // compares values from both code paths).
  c.loglik = 0.0;
  for (long t = 0; t < T; ++t) c.loglik += c.log_c[t];
  if (!std::isfinite(c.loglik)) throw NumericError("non-finite log likelihood");

  backward_last(c.beta_hat.row(T - 1).transpose());
  for (long t = T - 2; t >= 0; --t) {
    p = dens.row(t + 1).transpose();
    backward_step(realized.at(t + 1), p, c.beta_hat.row(t + 1).transpose(),
                  c.beta_hat.row(t).transpose());
  }

  for (long t = 0; t < T; ++t)
    marginal_weights(c.alpha_hat.row(t).transpose(), c.beta_hat.row(t).transpose(),
                     c.gamma.row(t).transpose());

  for (long t = 1; t < T; ++t) {
    p = dens.row(t).transpose();
    pair_weights(c.alpha_hat.row(t - 1).transpose(), realized.at(t), p,
                 c.beta_hat.row(t).transpose(), c.xi[static_cast<std::size_t>(t)]);
  }

  if (meter) meter->charge_full_pass();
  return c;
}

double log_likelihood(const HmmParams& params, const Matrix& y) {
  const long T = y.rows();
  const int N = params.n_states();
  if (T < 1) throw DataError("empty observation sequence");
  const RealizedTransitions realized = realize(params.transition);
  check_boundary(realized, T);

  Vector p(N), a(N), a_next(N);
  double shift = shifted_densities(params.emission, y.row(0).transpose(), p, 0);
  double ll = std::log(forward_first(realized.delta, p, a)) + shift;
  for (long t = 1; t < T; ++t) {
    shift = shifted_densities(params.emission, y.row(t).transpose(), p, t);
    ll += std::log(forward_step(a, realized.at(t), p, a_next)) + shift;
    a.swap(a_next);
  }
  if (!std::isfinite(ll)) throw NumericError("non-finite log likelihood");
  return ll;
}

void tilde_update(long t, PosteriorCache& cache, const HmmParams& params,
                  const RealizedTransitions& realized, const Matrix& y, EpochMeter* meter) {
  const long T = cache.T();
  const int N = static_cast<int>(cache.alpha_hat.cols());
  check_boundary(realized, T);

  Vector p(N);
  const double shift = shifted_densities(params.emission, y.row(t).transpose(), p, t);

  if (t == 0) {
    cache.log_c[0] = std::log(forward_first(realized.delta, p, cache.alpha_hat.row(0).transpose())) + shift;
  } else {
    cache.log_c[t] = std::log(forward_step(cache.alpha_hat.row(t - 1).transpose(), realized.at(t),
                                           p, cache.alpha_hat.row(t).transpose())) +
                     shift;
  }

  if (t == T - 1) {
    backward_last(cache.beta_hat.row(t).transpose());
  } else {
    Vector p_next(N);
    shifted_densities(params.emission, y.row(t + 1).transpose(), p_next, t + 1);
    backward_step(realized.at(t + 1), p_next, cache.beta_hat.row(t + 1).transpose(),
                  cache.beta_hat.row(t).transpose());
  }

  marginal_weights(cache.alpha_hat.row(t).transpose(), cache.beta_hat.row(t).transpose(),
                   cache.gamma.row(t).transpose());
  if (t > 0)
    pair_weights(cache.alpha_hat.row(t - 1).transpose(), realized.at(t), p,
                 cache.beta_hat.row(t).transpose(), cache.xi[static_cast<std::size_t>(t)]);

  if (meter) meter->charge(1);
}

std::vector<int> posterior_decode(const PosteriorCache& cache) {
  const long T = cache.T();
  std::vector<int> states(static_cast<std::size_t>(T));
  for (long t = 0; t < T; ++t) {
    Eigen::Index best = 0;
    cache.gamma.row(t).maxCoeff(&best);
    states[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return states;
}

}  // namespace vrhmm
