#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vrhmm/params.hpp"

using namespace vrhmm;

TEST_CASE("row softmax produces stochastic matrices") {
  TransitionLogits lg(3);
  lg.eta_gamma << 0, 1.5, -0.7, 2.0, 0, 0.3, -1.0, 0.5, 0;
  Matrix g = transition_from_logits(lg);
  for (int i = 0; i < 3; ++i) {
    CHECK(g.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
    for (int j = 0; j < 3; ++j) CHECK(g(i, j) > 0.0);
  }
}

TEST_CASE("uniform off-diagonal logit recovers a 0.9-diagonal matrix") {
  // exp(x)/(1 + 2 exp(x)) = 0.05 per off-diagonal entry when x solves it
  const double x = std::log((1.0 / 0.9 - 1.0) / 2.0);
  TransitionLogits lg(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) lg.eta_gamma(i, j) = x;
  Matrix g = transition_from_logits(lg);
  for (int i = 0; i < 3; ++i) {
    CHECK(g(i, i) == doctest::Approx(0.9).epsilon(1e-14));
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(g(i, j) == doctest::Approx(0.05).epsilon(1e-14));
  }
}

TEST_CASE("masked entries are exactly zero and carry no mass") {
  TransitionLogits lg(3);
  lg.eta_gamma.setConstant(0.4);
  lg.eta_gamma.diagonal().setZero();
  lg.mask(0, 2) = true;
  lg.mask(2, 0) = true;
  lg.mask(2, 1) = true;
  Matrix g = transition_from_logits(lg);
  CHECK(g(0, 2) == 0.0);
  CHECK(g(2, 0) == 0.0);
  CHECK(g(2, 1) == 0.0);
  CHECK(g(2, 2) == 1.0);
  CHECK(g.row(0).sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("an all-masked row is a configuration error") {
  TransitionLogits lg(2);
  lg.mask(0, 0) = lg.mask(0, 1) = true;
  CHECK_THROWS_AS(transition_from_logits(lg), ConfigError);
}

TEST_CASE("logit shift invariance: max-shifted softmax handles huge logits") {
  TransitionLogits lg(2);
  lg.eta_gamma(0, 1) = 800.0;  // exp(800) overflows without the shift
  lg.eta_gamma(1, 0) = -800.0;
  Matrix g = transition_from_logits(lg);
  CHECK(g(0, 1) == doctest::Approx(1.0));
  CHECK(g(1, 0) == doctest::Approx(0.0));
  CHECK(std::isfinite(g.sum()));
}

TEST_CASE("stationary distribution of a known 2-state chain") {
  Matrix g(2, 2);
  g << 0.9, 0.1, 0.2, 0.8;
  Vector pi = stationary_distribution(g);
  CHECK(pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("stationary distribution rejects non-ergodic chains") {
  CHECK_THROWS_AS(stationary_distribution(Matrix::Identity(3, 3)), NumericError);

  // Upper-triangular with an absorbing last state: pi = e3 is not positive.
  Matrix g(3, 3);
  g << 0.871, 0.123, 0.006, 0.0, 0.962, 0.038, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(stationary_distribution(g), NumericError);
}

TEST_CASE("homogeneous pack/unpack round trip preserves free logits") {
  std::mt19937_64 rng(11);
  HmmParams p = oracle::random_gaussian_model(3, 2, rng);
  Vector phi = p.pack();
  HmmParams q = oracle::random_gaussian_model(3, 2, rng);
  q.unpack(phi);
  CHECK((q.pack() - phi).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(p.dim() == 12 + 6 + 2);
}

TEST_CASE("masked coordinates never enter the flat vector") {
  HomogeneousTransition tr(3);
  tr.logits.mask(0, 2) = true;
  TransitionModel m{std::move(tr)};
  CHECK(eta_free_count(m) == 5 + 2);
  Vector v(7);
  for (int i = 0; i < 7; ++i) v[i] = i + 1.0;
  unpack_eta(m, v);
  const auto& t2 = std::get<HomogeneousTransition>(m);
  CHECK(t2.logits.eta_gamma(0, 2) == 0.0);  // pinned, untouched
  CHECK(t2.logits.eta_gamma(0, 1) == 1.0);
  Vector w(7);
  pack_eta(m, w);
  CHECK((w - v).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("dive transitions have the block and kron structure") {
  std::mt19937_64 rng(5);
  Matrix y = oracle::random_dive_data(20, rng);
  HmmParams p = oracle::random_dive_model(y, rng);
  RealizedTransitions r = realize(p.transition);
  REQUIRE(r.gammas.size() == 2);

  const Matrix& within = r.gammas[0];
  const Matrix& between = r.gammas[1];
  for (int i = 0; i < 9; ++i) {
    CHECK(within.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(between.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 9; ++j) {
      if (i / 3 != j / 3) CHECK(within(i, j) == 0.0);        // type never changes in-dive
      if (i / 3 == j / 3 && j % 3 < i % 3) CHECK(within(i, j) == 0.0);  // no phase backtrack
      if (j % 3 != 0) CHECK(between(i, j) == 0.0);           // dives start in descent
    }
  }
  // Rows of the same source type share the coarse row in the between matrix.
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      CHECK(between(3 * a, 3 * b) == between(3 * a + 1, 3 * b));
      CHECK(between(3 * a, 3 * b) == between(3 * a + 2, 3 * b));
    }
  // Initial distribution only on descent states.
  CHECK(r.delta[1] == 0.0);
  CHECK(r.delta[2] == 0.0);
  CHECK(r.delta.sum() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(p.eta_dim() == 17);
  CHECK(p.theta_dim() == 21);
  Vector phi = p.pack();
  HmmParams q = p;
  q.unpack(phi);
  CHECK((q.pack() - phi).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("log-variance floor keeps the likelihood bounded") {
  DiagGaussianEmission em(2, 1);
  Emission e{em};
  Vector theta(4);
  theta << 0.0, 0.0, -1000.0, 0.0;
  unpack_theta(e, theta);
  const auto& g = std::get<DiagGaussianEmission>(e);
  CHECK(g.log_var(0, 0) == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("epoch meter counts single-index work in units of T") {
  EpochMeter m(50);
  m.charge(25);
  CHECK(m.epochs() == doctest::Approx(0.5));
  m.charge_full_pass();
  CHECK(m.epochs() == doctest::Approx(1.5));
  CHECK(m.units() == 75);
}
