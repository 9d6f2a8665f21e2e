#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vrhmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Row-major so matrix.row(t).transpose() is contiguous and binds to
// Eigen::Ref<Vector> without a copy.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Invalid model/optimizer configuration (exit code 2 at the CLI).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure at runtime (degenerate likelihood, non-finite gradient,
/// line-search cap).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Work meter in units of single-index operations; T units make one epoch.
/// One full E step, T stochastic gradient evaluations, T tilde updates, one
/// gradient-store initialization, or one full-batch gradient each cost T
/// units, so traces from different algorithms are directly comparable.
class EpochMeter {
 public:
  explicit EpochMeter(long long t) : t_(t) {}

  void charge(long long units) { units_ += units; }
  void charge_full_pass() { units_ += t_; }

  double epochs() const { return static_cast<double>(units_) / static_cast<double>(t_); }
  long long units() const { return units_; }
  long long horizon() const { return t_; }

 private:
  long long t_;
  long long units_ = 0;
};

}  // namespace vrhmm
