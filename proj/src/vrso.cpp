#include "vrhmm/vrso.hpp"

#include <cmath>

namespace vrhmm {

void GradientStore::initialize(const HmmParams& params, const RealizedTransitions& realized,
                               const PosteriorCache& cache, const Matrix& y, EpochMeter* meter) {
  const long T = cache.T();
  per_index.assign(static_cast<std::size_t>(T), SplitGradient());
  mean = SplitGradient(params.theta_dim(), params.eta_dim());
  for (long t = 0; t < T; ++t) {
    per_index[static_cast<std::size_t>(t)] = grad_f_t(params, realized, cache, y, t, meter);
    mean += per_index[static_cast<std::size_t>(t)];
  }
  mean *= 1.0 / static_cast<double>(T);
}

LipschitzResult lipschitz_check(double lhat, double loss0, double grad_sq_norm,
                                const std::function<double(double)>& loss_at_step) {
  if (std::sqrt(grad_sq_norm) < 1e-8) return {lhat, 0};
  int doublings = 0;
  while (loss_at_step(lhat) > loss0 - grad_sq_norm / (2.0 * lhat)) {
    lhat *= 2.0;
    if (++doublings > 60) throw NumericError("Lipschitz line search exceeded 60 doublings");
  }
  return {lhat, doublings};
}

void vrso_pe(HmmParams& params, PosteriorCache& cache, const Matrix& y,
             StepSizes& steps, const VrsoOptions& opts, IndexSampler& sampler,
             GradientStore& store, EpochMeter* meter) {
  const long T = y.rows();
  const long M = opts.iters > 0 ? opts.iters : T;
  const double decay = std::pow(2.0, -1.0 / static_cast<double>(T));
  const int td = params.theta_dim();
  const int ed = params.eta_dim();

  RealizedTransitions realized = realize(params.transition);
  Vector theta(td), eta(ed);

  for (long m = 0; m < M; ++m) {
    const long t = sampler.next();
    if (opts.partial_e) tilde_update(t, cache, params, realized, y, meter);

    SplitGradient g = grad_f_t(params, realized, cache, y, t, meter);

    if (opts.line_search) {
      pack_theta(params.emission, theta);
      const double loss_g0 = loss_g_t(params.emission, cache, y, t);
      steps.lhat_g = lipschitz_check(steps.lhat_g, loss_g0, g.theta.squaredNorm(),
                                     [&](double lhat) {
                                       Emission trial = params.emission;
                                       unpack_theta(trial, theta - g.theta / lhat);
                                       return loss_g_t(trial, cache, y, t);
                                     })
                         .lhat;

      pack_eta(params.transition, eta);
      const double loss_h0 = loss_h_t(realized, cache, t);
      steps.lhat_h = lipschitz_check(steps.lhat_h, loss_h0, g.eta.squaredNorm(),
                                     [&](double lhat) {
                                       TransitionModel trial = params.transition;
                                       unpack_eta(trial, eta - g.eta / lhat);
                                       return loss_h_t(realize(trial), cache, t);
                                     })
                         .lhat;
    }

    SplitGradient v = g;
    v -= store.per_index[static_cast<std::size_t>(t)];
    v += store.mean;

    pack_theta(params.emission, theta);
    theta -= steps.lambda_theta() * v.theta;
    unpack_theta(params.emission, theta);

    pack_eta(params.transition, eta);
    eta -= steps.lambda_eta() * v.eta;
    unpack_eta(params.transition, eta);
    realized = realize(params.transition);

    if (opts.algo == Algo::SAGA) {
      SplitGradient diff = g;
      diff -= store.per_index[static_cast<std::size_t>(t)];
      diff *= 1.0 / static_cast<double>(T);
      store.mean += diff;
      store.per_index[static_cast<std::size_t>(t)] = std::move(g);
    }

    if (opts.line_search) {
      steps.lhat_g *= decay;
      steps.lhat_h *= decay;
    }
  }
}

Vector vrso_flat(const Vector& x0, long horizon, long iters, double lambda, Algo algo,
                 const std::function<Vector(long, const Vector&)>& grad_t,
                 IndexSampler& sampler) {
  Vector x = x0;
  std::vector<Vector> store(static_cast<std::size_t>(horizon));
  Vector mean = Vector::Zero(x0.size());
  for (long t = 0; t < horizon; ++t) {
    store[static_cast<std::size_t>(t)] = grad_t(t, x0);
    mean += store[static_cast<std::size_t>(t)];
  }
  mean /= static_cast<double>(horizon);

  for (long m = 0; m < iters; ++m) {
    const long t = sampler.next();
    Vector g = grad_t(t, x);
    Vector v = g - store[static_cast<std::size_t>(t)] + mean;
    x -= lambda * v;
    if (algo == Algo::SAGA) {
      mean += (g - store[static_cast<std::size_t>(t)]) / static_cast<double>(horizon);
      store[static_cast<std::size_t>(t)] = std::move(g);
    }
  }
  return x;
}

}  // namespace vrhmm
