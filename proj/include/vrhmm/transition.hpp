#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "vrhmm/types.hpp"

namespace vrhmm {

/// Unconstrained logits for a homogeneous transition matrix and initial
/// distribution. Diagonal entries of eta_gamma and eta_delta[0] are pinned to
/// zero for identifiability and never appear in the free-parameter vector.
/// Masked entries are structural zeros: they map to probability exactly 0 and
/// carry no gradient.
struct TransitionLogits {
  Matrix eta_gamma;  // N x N, diag pinned 0
  Vector eta_delta;  // N, [0] pinned 0
  BoolMatrix mask;   // N x N, true = structurally zero

  explicit TransitionLogits(int n);
  int n() const { return static_cast<int>(eta_delta.size()); }
};

/// Row-wise softmax over the unmasked support, max-shifted for overflow
/// safety. Throws ConfigError if some row has an all-masked support.
Matrix transition_from_logits(const TransitionLogits& eta);

/// Softmax of eta_delta (full support).
Vector initial_from_logits(const TransitionLogits& eta);

/// Solves pi Gamma = pi for an ergodic chain. Throws NumericError when the
/// unit eigenvalue is not simple or the stationary vector is not strictly
/// positive (e.g. identity matrices, absorbing dive-phase chains).
Vector stationary_distribution(const Matrix& gamma);

struct HomogeneousTransition {
  TransitionLogits logits;
  explicit HomogeneousTransition(int n) : logits(n) {}
  explicit HomogeneousTransition(TransitionLogits l) : logits(std::move(l)) {}
};

/// Hierarchical dive-model transitions over N = 9 states (3 dive types x 3
/// phases, type-major; phases are descent=0, bottom=1, ascent=2).
///
/// Within a dive the realized matrix is block-diagonal with upper-triangular
/// 3x3 blocks; between dives it is Gamma_c kron [[1,0,0],[1,0,0],[1,0,0]].
/// The boundary sequence marks, per time index t, whether the transition into
/// t crosses a dive end (derived from E_{t-1} of the observations).
struct DiveTransition {
  Eigen::Matrix3d coarse;                // logits, diag pinned 0
  std::array<Eigen::Matrix3d, 3> fine;   // logits, strictly-upper free, diag pinned 0
  Eigen::Vector3d delta;                 // coarse initial logits, [0] pinned 0
  std::shared_ptr<const std::vector<std::uint8_t>> boundary;

  DiveTransition();
};

using TransitionModel = std::variant<HomogeneousTransition, DiveTransition>;

/// Probability-space view of a TransitionModel at fixed logits. Dive models
/// carry two matrices (within, between) selected per index by the boundary
/// sequence.
struct RealizedTransitions {
  Vector delta;
  std::vector<Matrix> gammas;
  const std::vector<std::uint8_t>* boundary = nullptr;

  // Transition matrix into time index t (0-based, t >= 1).
  const Matrix& at(long t) const {
    if (gammas.size() == 1) return gammas[0];
    return (*boundary)[static_cast<std::size_t>(t)] ? gammas[1] : gammas[0];
  }
};

int n_states(const TransitionModel& m);
int eta_free_count(const TransitionModel& m);
void pack_eta(const TransitionModel& m, Eigen::Ref<Vector> out);
void unpack_eta(TransitionModel& m, const Eigen::Ref<const Vector>& in);
RealizedTransitions realize(const TransitionModel& m);

/// Adds d/d(eta_free) of -sum_i gamma1_i log delta_i(eta) to g.
void accumulate_delta_grad(const TransitionModel& m, const RealizedTransitions& r,
                           const Eigen::Ref<const Vector>& gamma1, Eigen::Ref<Vector> g);

/// Adds d/d(eta_free) of -sum_ij xi_ij log Gamma_t^(ij)(eta) to g, for the
/// transition into index t.
void accumulate_gamma_grad(const TransitionModel& m, const RealizedTransitions& r,
                           long t, const Matrix& xi, Eigen::Ref<Vector> g);

}  // namespace vrhmm
