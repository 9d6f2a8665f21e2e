#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "vrhmm/surrogate.hpp"

namespace vrhmm {

enum class Algo { SVRG, SAGA };

/// Separate Lipschitz estimates and step sizes for the emission and
/// transition gradient blocks. The divider starts at 3 and doubles when an
/// outer attempt fails, persisting for the rest of the run.
struct StepSizes {
  double lhat_g = 100.0 / 3.0;
  double lhat_h = 100.0 / 3.0;
  double divider = 3.0;

  double lambda_theta() const { return 1.0 / (divider * lhat_g); }
  double lambda_eta() const { return 1.0 / (divider * lhat_h); }
};

/// Uniform sampling without replacement: a shuffled permutation of 0..T-1,
/// reshuffled after every T draws.
class IndexSampler {
 public:
  IndexSampler(long t, std::mt19937_64& rng) : rng_(&rng), perm_(static_cast<std::size_t>(t)) {
    for (long i = 0; i < t; ++i) perm_[static_cast<std::size_t>(i)] = i;
    reshuffle();
  }

  long next() {
    if (pos_ == perm_.size()) reshuffle();
    return perm_[pos_++];
  }

 private:
  void reshuffle() {
    std::shuffle(perm_.begin(), perm_.end(), *rng_);
    pos_ = 0;
  }

  std::mt19937_64* rng_;
  std::vector<long> perm_;
  std::size_t pos_ = 0;
};

/// Control-variate table: one stored gradient per index plus their running
/// mean. SVRG freezes the table after initialization; SAGA overwrites the
/// entry drawn at each step and updates the mean incrementally.
struct GradientStore {
  std::vector<SplitGradient> per_index;
  SplitGradient mean;

  /// Fills every slot from the cache weights at the given parameters.
  /// Charges T units.
  void initialize(const HmmParams& params, const RealizedTransitions& realized,
                  const PosteriorCache& cache, const Matrix& y, EpochMeter* meter = nullptr);
};

struct LipschitzResult {
  double lhat;
  int doublings;
};

/// Doubles lhat until the quadratic-decrease test
///   loss(1/lhat) <= loss0 - grad_sq_norm / (2 lhat)
/// holds. Skipped (returns unchanged) when sqrt(grad_sq_norm) < 1e-8. Throws
/// NumericError after 60 doublings.
LipschitzResult lipschitz_check(double lhat, double loss0, double grad_sq_norm,
                                const std::function<double(double)>& loss_at_step);

struct VrsoOptions {
  Algo algo = Algo::SVRG;
  bool partial_e = true;
  long iters = 0;  // M; 0 means T
  bool line_search = true;
};

/// One M-step pass of variance-reduced stochastic optimization, optionally
/// interleaved with partial E updates at the sampled indices. Mutates params,
/// cache (when partial_e), steps (line-search growth plus per-update decay of
/// the Lipschitz estimates) and store (SAGA). The caller owns store
/// initialization and its epoch charge.
void vrso_pe(HmmParams& params, PosteriorCache& cache, const Matrix& y,
             StepSizes& steps, const VrsoOptions& opts, IndexSampler& sampler,
             GradientStore& store, EpochMeter* meter = nullptr);

/// Generic flat-vector VRSO for a finite sum (1/T) sum_t f_t, used by tests
/// against closed-form objectives. No partial E, no line search.
Vector vrso_flat(const Vector& x0, long horizon, long iters, double lambda, Algo algo,
                 const std::function<Vector(long, const Vector&)>& grad_t,
                 IndexSampler& sampler);

}  // namespace vrhmm
