#pragma once

#include <random>
#include <string>

#include "vrhmm/em_driver.hpp"

namespace vrhmm {

struct SimResult {
  Matrix y;                 // T x D
  std::vector<int> states;  // T
};

/// Samples a state path and observations from the model. For dive models the
/// realized transition matrix at index t follows the simulated dive ends
/// (between-dive matrix whenever E_{t-1} = 1), and the boundary sequence of
/// params.transition is left untouched; use boundary_from_dive_ends on the
/// returned data before fitting.
SimResult simulate(const HmmParams& params, long T, std::mt19937_64& rng);

/// Benchmark generating model: diagonal Gaussian emissions with means drawn
/// N(0, I) and unit log-variance -2; transition matrix with constant diagonal
/// 0.9 (T < 1e4) or 0.999, uniform off-diagonal mass; initial distribution
/// Dirichlet(1).
HmmParams benchmark_generator(int n, int d, long T, std::mt19937_64& rng);

/// Benchmark random initializer from the data: means N(ybar, diag(Q)),
/// log-variances log(diag(Q)) with Q the sample covariance diagonal, initial
/// logits N(0,1), off-diagonal transition logits N(-2, 2^2).
HmmParams benchmark_init(const Matrix& y, int n, std::mt19937_64& rng);

/// Hierarchical dive model at realistic reference values (3 dive types x 3
/// phases). The boundary pointer is unset.
HmmParams dive_generator();

/// Dive random initializer: mu N(Dbar, s^2), log sigma N(log s, 1), ascent
/// logit-p N(logit(Ebar), 1), coarse logits N(-3,1), fine logits N(-1,1),
/// initial logits N(0,1). y columns are (D, E).
HmmParams dive_init(const Matrix& y, std::mt19937_64& rng);

/// Boundary sequence b_t = (E_{t-1} == 1), b_0 = 0, from the dive-end column.
std::vector<std::uint8_t> boundary_from_dive_ends(const Matrix& y);

/// Installs the data-derived boundary sequence on a dive transition model.
/// No-op for homogeneous models.
void attach_boundary(HmmParams& params, const Matrix& y);

/// Known algorithm labels: svrg-fe, svrg-pe1, svrg-pe2, saga-fe, saga-pe1,
/// saga-pe2, gd. fe = full E only (P=false, M=T), pe1 = partial E with M=T,
/// pe2 = partial E with M=10T.
OptimizerConfig algorithm_config(const std::string& label, long T);

struct BenchmarkConfig {
  long T = 1000;
  int n = 3;
  int d = 3;
  int datasets = 5;
  int inits = 5;
  std::vector<std::string> algorithms;  // empty = all seven
  int max_updates = 200;
  double max_epochs = 0.0;
  double grad_tol = 1e-2;
  std::uint64_t seed = 1;
  int threads = 4;
};

struct BenchmarkRow {
  std::string experiment;
  std::string algorithm;
  bool partial_e = false;
  long iters = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  double epochs = 0.0;
  double loglik = 0.0;
  bool failed = false;
  std::string error;
};

/// Runs every (dataset, init, algorithm) cell. Initializations are shared
/// across algorithms; per-run failures are recorded in the row and do not
/// stop the matrix. Cells run on a bounded worker pool.
std::vector<BenchmarkRow> benchmark_matrix(const BenchmarkConfig& cfg);

}  // namespace vrhmm
