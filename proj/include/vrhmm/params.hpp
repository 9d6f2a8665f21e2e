#pragma once

#include "vrhmm/emission.hpp"
#include "vrhmm/transition.hpp"

namespace vrhmm {

/// Full model parameters: phi = (theta, eta) with theta the emission block and
/// eta the transition/initial logits. The flat layout is [theta | eta].
struct HmmParams {
  Emission emission;
  TransitionModel transition;

  int n_states() const;
  int theta_dim() const { return theta_free_count(emission); }
  int eta_dim() const { return eta_free_count(transition); }
  int dim() const { return theta_dim() + eta_dim(); }

  Vector pack() const;
  void unpack(const Eigen::Ref<const Vector>& phi);
};

/// Gradient of the surrogate split into its emission (G) and transition (H)
/// blocks; the blocks see disjoint parameters so they keep separate Lipschitz
/// estimates.
struct SplitGradient {
  Vector theta;
  Vector eta;

  SplitGradient() = default;
  SplitGradient(int td, int ed) : theta(Vector::Zero(td)), eta(Vector::Zero(ed)) {}

  void setZero() {
    theta.setZero();
    eta.setZero();
  }
  double squaredNorm() const { return theta.squaredNorm() + eta.squaredNorm(); }
  double norm() const { return std::sqrt(squaredNorm()); }

  SplitGradient& operator+=(const SplitGradient& o) {
    theta += o.theta;
    eta += o.eta;
    return *this;
  }
  SplitGradient& operator-=(const SplitGradient& o) {
    theta -= o.theta;
    eta -= o.eta;
    return *this;
  }
  SplitGradient& operator*=(double s) {
    theta *= s;
    eta *= s;
    return *this;
  }
};

}  // namespace vrhmm
