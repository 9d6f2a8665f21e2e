#pragma once

#include <vector>

#include "vrhmm/params.hpp"

namespace vrhmm {

/// Scaled forward-backward quantities for one observation sequence of length
/// T. Rows of alpha_hat and beta_hat each sum to one; log_c[t] holds the log
/// normalizer of the forward step (including the per-row density shift), so
/// loglik = sum(log_c). xi[0] is empty by convention; xi[t] weights the
/// transition into index t.
struct PosteriorCache {
  RowMatrix alpha_hat;  // T x N
  RowMatrix beta_hat;   // T x N
  RowMatrix gamma;      // T x N
  Vector log_c;      // T
  std::vector<Matrix> xi;  // T entries, xi[0] empty
  double loglik = 0.0;

  long T() const { return alpha_hat.rows(); }
};

/// Full forward-backward pass. Charges T units to the meter when given.
/// Throws NumericError if some observation has zero density in every state.
PosteriorCache e_step(const HmmParams& params, const Matrix& y, EpochMeter* meter = nullptr);

/// Forward pass only. Not charged: likelihood monitoring is free by
/// convention so traces stay comparable across algorithms.
double log_likelihood(const HmmParams& params, const Matrix& y);

/// Partial E step at one index: recompute alpha_hat[t], beta_hat[t], gamma[t]
/// and xi[t] from the current parameters and the (possibly stale) neighboring
/// rows, leaving everything else untouched. Charges 1 unit. Uses the same
/// arithmetic kernels as e_step, so a sweep over all t from a fresh cache
/// reproduces the exact posteriors bitwise.
void tilde_update(long t, PosteriorCache& cache, const HmmParams& params,
                  const RealizedTransitions& realized, const Matrix& y,
                  EpochMeter* meter = nullptr);

/// Most probable state per index under the marginal posteriors.
std::vector<int> posterior_decode(const PosteriorCache& cache);

}  // namespace vrhmm
