#pragma once

#include <optional>
#include <string>

#include "vrhmm/vrso.hpp"

namespace vrhmm {

struct TraceRow;

struct OptimizerConfig {
  Algo algo = Algo::SVRG;
  bool partial_e = true;
  long iters_per_update = 0;   // M; 0 means T
  int max_updates = 100;       // K
  double lhat_init = 100.0 / 3.0;
  bool line_search = true;
  double grad_tol = 1e-2;      // on ||grad log p||_2 / T; 0 disables
  int attempt_cap = 50;
  bool halve_on_success = false;  // invert the step-divider trigger
  std::uint64_t seed = 1;
  double max_epochs = 0.0;     // 0 means unlimited
  std::vector<TraceRow>* trace_sink = nullptr;  // live copy so callers can flush on abort
};

struct AttemptRecord {
  int k = 0;
  int attempts = 0;  // ell*(k)
  double loglik_before = 0.0;
  double loglik_after = 0.0;
  double divider = 0.0;
};

struct TraceRow {
  double epochs = 0.0;
  double loglik = 0.0;
  double grad_norm_over_t = 0.0;
  int k = 0;
  int attempts = 0;  // attempts used by the M step that produced this iterate
  int halvings = 0;  // cumulative step-divider doublings so far
};

struct FitResult {
  HmmParams params;
  double loglik = 0.0;
  bool converged = false;
  int outer_iters = 0;
  double epochs = 0.0;
  std::vector<TraceRow> trace;
  std::vector<AttemptRecord> attempts;
};

/// Stochastic EM with a likelihood-ascent guarantee: each outer iteration
/// runs a full E step, then repeats the stochastic M-step pass from the same
/// starting point with fresh sampling until the log likelihood does not
/// decrease. Failed attempts double the step divider for the rest of the run
/// (partial-E mode only). Throws NumericError when an outer iteration
/// exhausts the attempt cap.
FitResult em_vrso(HmmParams params, const Matrix& y, const OptimizerConfig& cfg);

struct V2Constants {
  double lipschitz = 1.0;   // L
  double curvature = 1.0;   // C
};

/// Sufficient-decrease variant: attempts are accepted once the surrogate
/// value falls below a contraction of the gap to the surrogate minimum,
/// F(phi') <= F* + (1+zeta)/2 (F(phi) - F*), with
/// zeta = 1/(C lambda (1-2L lambda) M) + 2L lambda / (1-2L lambda).
/// Requires zeta < 1 (ConfigError otherwise), full E weights (no partial E)
/// and SVRG. F* is found by a full-batch gradient-descent oracle.
FitResult em_vrso_v2(HmmParams params, const Matrix& y, const OptimizerConfig& cfg,
                     const V2Constants& c2);

/// Full-batch gradient descent on F(.|phi_k) until ||grad F|| < 1e-8 or 1e4
/// iterations. Returns the surrogate minimum value. Uncharged (oracle).
double surrogate_minimum(const HmmParams& params, const PosteriorCache& cache,
                         const Matrix& y, StepSizes steps);

/// Full-batch EM-GD baseline: E step then one line-searched gradient step on
/// the full surrogate per outer iteration. Two epochs per iteration.
FitResult baseline_gd(HmmParams params, const Matrix& y, const OptimizerConfig& cfg);

double zeta_v2(const V2Constants& c2, double lambda, long m);

}  // namespace vrhmm
