#pragma once

#include <variant>

#include "vrhmm/types.hpp"

namespace vrhmm {

/// Independent Gaussians per observation channel, one (mean, log-variance)
/// pair per state and channel. fix_variance freezes the log-variances (they
/// drop out of the free-parameter vector).
struct DiagGaussianEmission {
  Matrix mean;     // N x D
  Matrix log_var;  // N x D
  bool fix_variance = false;

  DiagGaussianEmission(int n, int d)
      : mean(Matrix::Zero(n, d)), log_var(Matrix::Zero(n, d)) {}
};

/// Dive-model emissions over 9 states (3 types x 3 phases, type-major):
/// a Gaussian depth-displacement channel and a Bernoulli dive-end indicator.
/// The Bernoulli success probability is structurally zero in descent and
/// bottom phases; only the three ascent logits are free.
struct DiveEmission {
  Vector mu;       // 9
  Vector rho;      // 9, log sigma^2
  Vector logit_p;  // 3, ascent phase per type

  DiveEmission() : mu(Vector::Zero(9)), rho(Vector::Zero(9)), logit_p(Vector::Zero(3)) {}
};

using Emission = std::variant<DiagGaussianEmission, DiveEmission>;

int n_states(const Emission& e);
int obs_dim(const Emission& e);
int theta_free_count(const Emission& e);
void pack_theta(const Emission& e, Eigen::Ref<Vector> out);
/// Log-variances are clamped below at log(1e-10) to keep the likelihood
/// bounded.
void unpack_theta(Emission& e, const Eigen::Ref<const Vector>& in);

/// Per-state log density of one observation row. Dive rows are (D_t, E_t);
/// states with p = 0 and E_t = 1 get -inf.
void log_density_row(const Emission& e, const Eigen::Ref<const Vector>& y,
                     Eigen::Ref<Vector> out);

/// Adds d/d(theta_free) of -sum_i gamma_i log f_i(y) to g.
void accumulate_theta_grad(const Emission& e, const Eigen::Ref<const Vector>& y,
                           const Eigen::Ref<const Vector>& gamma, Eigen::Ref<Vector> g);

/// -sum_i gamma_i log f_i(y), with the 0 * log 0 = 0 convention so structural
/// zeros with zero posterior weight do not poison the sum.
double emission_loss(const Emission& e, const Eigen::Ref<const Vector>& y,
                     const Eigen::Ref<const Vector>& gamma);

}  // namespace vrhmm
