#pragma once

#include "vrhmm/posterior.hpp"

namespace vrhmm {

/// Baum-Welch surrogate decomposed per index, F = (1/T) sum_t F_t, scaled so
/// stochastic estimates are unbiased for the average. Each F_t splits into an
/// emission part G_t (theta only) and a transition part H_t (eta only); index
/// 0 carries the initial-distribution term instead of a transition term.
/// Weights (gamma, xi) come from the cache and are treated as constants.

/// G_t value at the given emission parameters.
double loss_g_t(const Emission& e, const PosteriorCache& cache, const Matrix& y, long t);

/// H_t value at the given realized transitions.
double loss_h_t(const RealizedTransitions& realized, const PosteriorCache& cache, long t);

double loss_f_t(const HmmParams& params, const RealizedTransitions& realized,
                const PosteriorCache& cache, const Matrix& y, long t);

/// Gradient of F_t. Charges 1 unit.
SplitGradient grad_f_t(const HmmParams& params, const RealizedTransitions& realized,
                       const PosteriorCache& cache, const Matrix& y, long t,
                       EpochMeter* meter = nullptr);

/// (1/T) sum_t F_t. Not charged (used only by line-search style checks and
/// exit tests).
double full_loss(const HmmParams& params, const RealizedTransitions& realized,
                 const PosteriorCache& cache, const Matrix& y);

/// (1/T) sum_t grad F_t. Charges T units. By the Fisher identity this equals
/// -(1/T) grad log p when the cache weights were computed at the same
/// parameters.
SplitGradient full_grad(const HmmParams& params, const RealizedTransitions& realized,
                        const PosteriorCache& cache, const Matrix& y,
                        EpochMeter* meter = nullptr);

}  // namespace vrhmm
