#include "vrhmm/em_driver.hpp"

#include <cmath>
#include <string>

namespace vrhmm {

namespace {

// Joint Armijo-style step on the full surrogate; returns the new loss.
// Grows lhat until the quadratic-decrease test holds, then applies the step.
double full_batch_step(HmmParams& params, const PosteriorCache& cache, const Matrix& y,
                       double& lhat) {
  RealizedTransitions realized = realize(params.transition);
  SplitGradient g = full_grad(params, realized, cache, y, nullptr);
  const double loss0 = full_loss(params, realized, cache, y);
  const Vector phi0 = params.pack();
  const int td = params.theta_dim();

  auto trial_at = [&](double l) {
    HmmParams trial = params;
    Vector phi = phi0;
    phi.head(td) -= g.theta / l;
    phi.tail(phi.size() - td) -= g.eta / l;
    trial.unpack(phi);
    return trial;
  };

  lhat = lipschitz_check(lhat, loss0, g.squaredNorm(),
                         [&](double l) {
                           HmmParams trial = trial_at(l);
                           return full_loss(trial, realize(trial.transition), cache, y);
                         })
             .lhat;

  if (g.norm() >= 1e-8) params = trial_at(lhat);
  RealizedTransitions r2 = realize(params.transition);
  return full_loss(params, r2, cache, y);
}

}  // namespace

double zeta_v2(const V2Constants& c2, double lambda, long m) {
  const double denom = 1.0 - 2.0 * c2.lipschitz * lambda;
  if (denom <= 0.0) throw ConfigError("step size too large: 1 - 2 L lambda must be positive");
  return 1.0 / (c2.curvature * lambda * denom * static_cast<double>(m)) +
         2.0 * c2.lipschitz * lambda / denom;
}

double surrogate_minimum(const HmmParams& params, const PosteriorCache& cache,
                         const Matrix& y, StepSizes steps) {
  HmmParams p = params;
  double lhat = steps.lhat_g;
  double loss = 0.0;
  for (int it = 0; it < 10000; ++it) {
    RealizedTransitions realized = realize(p.transition);
    SplitGradient g = full_grad(p, realized, cache, y, nullptr);
    if (g.norm() < 1e-8) break;
    loss = full_batch_step(p, cache, y, lhat);
  }
  RealizedTransitions realized = realize(p.transition);
  loss = full_loss(p, realized, cache, y);
  return loss;
}

FitResult em_vrso(HmmParams params, const Matrix& y, const OptimizerConfig& cfg) {
  const long T = y.rows();
  EpochMeter meter(T);
  std::mt19937_64 rng(cfg.seed);
  IndexSampler sampler(T, rng);
  StepSizes steps{cfg.lhat_init, cfg.lhat_init, 3.0};
  VrsoOptions opts{cfg.algo, cfg.partial_e, cfg.iters_per_update, cfg.line_search};

  FitResult res{std::move(params)};
  double ll = log_likelihood(res.params, y);
  int last_attempts = 0;
  int halvings = 0;

  for (int k = 1; k <= cfg.max_updates; ++k) {
    PosteriorCache cache = e_step(res.params, y, &meter);
    ll = cache.loglik;

    RealizedTransitions realized = realize(res.params.transition);
    GradientStore store;
    store.initialize(res.params, realized, cache, y, &meter);
    const double gnorm = store.mean.norm();

    res.trace.push_back({meter.epochs(), ll, gnorm, k - 1, last_attempts, halvings});
    if (cfg.trace_sink) cfg.trace_sink->push_back(res.trace.back());
    res.outer_iters = k - 1;
    if (cfg.grad_tol > 0.0 && gnorm < cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (cfg.max_epochs > 0.0 && meter.epochs() >= cfg.max_epochs) break;

    AttemptRecord rec;
    rec.k = k;
    rec.loglik_before = ll;
    for (int ell = 1;; ++ell) {
      if (ell > cfg.attempt_cap)
        throw NumericError("M step failed to reach the previous log likelihood within " +
                           std::to_string(cfg.attempt_cap) + " attempts");
      HmmParams trial = res.params;
      PosteriorCache tcache = cache;
      GradientStore tstore = store;
      StepSizes tsteps = steps;
      vrso_pe(trial, tcache, y, tsteps, opts, sampler, tstore, &meter);
      const double tll = log_likelihood(trial, y);

      const bool success = tll >= ll;
      const bool halve = cfg.halve_on_success ? success : !success;
      if (cfg.partial_e && halve) {
        steps.divider *= 2.0;
        ++halvings;
      }

      if (success) {
        res.params = std::move(trial);
        steps.lhat_g = tsteps.lhat_g;
        steps.lhat_h = tsteps.lhat_h;
        ll = tll;
        rec.attempts = ell;
        rec.loglik_after = tll;
        rec.divider = steps.divider;
        res.attempts.push_back(rec);
        last_attempts = ell;
        break;
      }
    }
  }

  res.loglik = ll;
  res.epochs = meter.epochs();
  return res;
}

FitResult em_vrso_v2(HmmParams params, const Matrix& y, const OptimizerConfig& cfg,
                     const V2Constants& c2) {
  if (cfg.partial_e) throw ConfigError("the sufficient-decrease variant requires a full E step");
  if (cfg.algo != Algo::SVRG) throw ConfigError("the sufficient-decrease variant requires SVRG");

  const long T = y.rows();
  const long M = cfg.iters_per_update > 0 ? cfg.iters_per_update : T;
  StepSizes steps{cfg.lhat_init, cfg.lhat_init, 3.0};
  const double zeta = zeta_v2(c2, steps.lambda_theta(), M);
  if (zeta >= 1.0)
    throw ConfigError("contraction factor zeta = " + std::to_string(zeta) + " is not below 1");

  EpochMeter meter(T);
  std::mt19937_64 rng(cfg.seed);
  IndexSampler sampler(T, rng);
  VrsoOptions opts{cfg.algo, false, cfg.iters_per_update, false};

  FitResult res{std::move(params)};
  double ll = log_likelihood(res.params, y);

  for (int k = 1; k <= cfg.max_updates; ++k) {
    PosteriorCache cache = e_step(res.params, y, &meter);
    ll = cache.loglik;

    RealizedTransitions realized = realize(res.params.transition);
    GradientStore store;
    store.initialize(res.params, realized, cache, y, &meter);
    const double gnorm = store.mean.norm();

    res.trace.push_back({meter.epochs(), ll, gnorm, k - 1});
    if (cfg.trace_sink) cfg.trace_sink->push_back(res.trace.back());
    res.outer_iters = k - 1;
    if (cfg.grad_tol > 0.0 && gnorm < cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (cfg.max_epochs > 0.0 && meter.epochs() >= cfg.max_epochs) break;

    const double f_star = surrogate_minimum(res.params, cache, y, steps);
    const double f0 = full_loss(res.params, realized, cache, y);
    const double threshold = f_star + 0.5 * (1.0 + zeta) * (f0 - f_star);

    AttemptRecord rec;
    rec.k = k;
    rec.loglik_before = ll;
    for (int ell = 1;; ++ell) {
      if (ell > cfg.attempt_cap)
        throw NumericError("M step failed the sufficient-decrease test within " +
                           std::to_string(cfg.attempt_cap) + " attempts");
      HmmParams trial = res.params;
      PosteriorCache tcache = cache;
      GradientStore tstore = store;
      StepSizes tsteps = steps;
      vrso_pe(trial, tcache, y, tsteps, opts, sampler, tstore, &meter);
      const double fl = full_loss(trial, realize(trial.transition), cache, y);
      if (fl <= threshold) {
        res.params = std::move(trial);
        ll = log_likelihood(res.params, y);
        rec.attempts = ell;
        rec.loglik_after = ll;
        rec.divider = steps.divider;
        res.attempts.push_back(rec);
        break;
      }
    }
  }

  res.loglik = ll;
  res.epochs = meter.epochs();
  return res;
}

FitResult baseline_gd(HmmParams params, const Matrix& y, const OptimizerConfig& cfg) {
  const long T = y.rows();
  EpochMeter meter(T);
  double lhat = cfg.lhat_init;

  FitResult res{std::move(params)};
  double ll = log_likelihood(res.params, y);

  for (int k = 1; k <= cfg.max_updates; ++k) {
    PosteriorCache cache = e_step(res.params, y, &meter);
    ll = cache.loglik;

    RealizedTransitions realized = realize(res.params.transition);
    SplitGradient g = full_grad(res.params, realized, cache, y, &meter);
    const double gnorm = g.norm();

    res.trace.push_back({meter.epochs(), ll, gnorm, k - 1});
    if (cfg.trace_sink) cfg.trace_sink->push_back(res.trace.back());
    res.outer_iters = k - 1;
    if (cfg.grad_tol > 0.0 && gnorm < cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (cfg.max_epochs > 0.0 && meter.epochs() >= cfg.max_epochs) break;

    full_batch_step(res.params, cache, y, lhat);
    ll = log_likelihood(res.params, y);
  }

  res.loglik = ll;
  res.epochs = meter.epochs();
  return res;
}

}  // namespace vrhmm
