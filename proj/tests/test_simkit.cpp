#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "vrhmm/simkit.hpp"

using namespace vrhmm;

TEST_CASE("masking every off-diagonal freezes the simulated chain") {
  DiagGaussianEmission em(3, 1);
  em.mean << 0.0, 5.0, 10.0;
  HomogeneousTransition tr(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) tr.logits.mask(i, j) = true;
  HmmParams p{Emission{std::move(em)}, TransitionModel{std::move(tr)}};

  std::mt19937_64 rng(1);
  SimResult s = simulate(p, 200, rng);
  for (long t = 1; t < 200; ++t) CHECK(s.states[static_cast<std::size_t>(t)] == s.states[0]);
}

TEST_CASE("simulation is deterministic in the seed") {
  std::mt19937_64 a(9), b(9);
  HmmParams pa = benchmark_generator(3, 2, 500, a);
  HmmParams pb = benchmark_generator(3, 2, 500, b);
  SimResult sa = simulate(pa, 500, a);
  SimResult sb = simulate(pb, 500, b);
  CHECK((sa.y - sb.y).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sa.states == sb.states);
}

TEST_CASE("simulated transition and emission frequencies match the generator") {
  std::mt19937_64 rng(17);
  const long T = 100000;
  HmmParams gen = benchmark_generator(3, 1, T, rng);
  const Matrix g = realize(gen.transition).gammas[0];
  SimResult s = simulate(gen, T, rng);

  // Transition counts: per source state the diagonal count is binomial.
  Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
  for (long t = 1; t < T; ++t)
    counts(s.states[static_cast<std::size_t>(t - 1)], s.states[static_cast<std::size_t>(t)]) += 1.0;
  for (int i = 0; i < 3; ++i) {
    const double ni = counts.row(i).sum();
    REQUIRE(ni > 100.0);
    for (int j = 0; j < 3; ++j) {
      const double sd = std::sqrt(ni * g(i, j) * (1.0 - g(i, j)));
      CHECK(std::abs(counts(i, j) - ni * g(i, j)) <= 4.0 * sd + 1.0);
    }
  }

  // Per-state sample means: 4 sigma / sqrt(n_i) bands around the true means.
  const auto& em = std::get<DiagGaussianEmission>(gen.emission);
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0, n = 0.0;
    for (long t = 0; t < T; ++t)
      if (s.states[static_cast<std::size_t>(t)] == i) {
        sum += s.y(t, 0);
        n += 1.0;
      }
    const double sigma = std::exp(0.5 * em.log_var(i, 0));
    CHECK(std::abs(sum / n - em.mean(i, 0)) <= 4.0 * sigma / std::sqrt(n));
  }
}

TEST_CASE("generator diagonal switches with the series length") {
  std::mt19937_64 rng(3);
  HmmParams short_gen = benchmark_generator(3, 1, 1000, rng);
  HmmParams long_gen = benchmark_generator(3, 1, 100000, rng);
  CHECK(realize(short_gen.transition).gammas[0](0, 0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(realize(long_gen.transition).gammas[0](0, 0) == doctest::Approx(0.999).epsilon(1e-12));
}

TEST_CASE("random initializer rejects degenerate data") {
  Matrix y = Matrix::Zero(50, 2);
  std::mt19937_64 rng(4);
  CHECK_THROWS_AS(benchmark_init(y, 2, rng), ConfigError);
  CHECK_THROWS_AS(dive_init(y, rng), ConfigError);
}

TEST_CASE("simulated dives respect the phase machine") {
  HmmParams p = dive_generator();
  std::mt19937_64 rng(23);
  SimResult s = simulate(p, 5000, rng);

  CHECK(s.states[0] % 3 == 0);  // every dive starts with a descent
  for (long t = 1; t < 5000; ++t) {
    const int prev = s.states[static_cast<std::size_t>(t - 1)];
    const int cur = s.states[static_cast<std::size_t>(t)];
    if (s.y(t - 1, 1) == 1.0) {
      CHECK(cur % 3 == 0);  // new dive after a dive end
    } else {
      CHECK(cur / 3 == prev / 3);     // type is fixed within a dive
      CHECK(cur % 3 >= prev % 3);     // phases never move backwards
    }
    if (s.y(t, 1) == 1.0) CHECK(cur % 3 == 2);  // dive ends happen in ascent only
  }
}

TEST_CASE("dive type choices at dive ends follow the coarse chain") {
  HmmParams p = dive_generator();
  // Every between-dive row of the same source type is the coarse row spread
  // over descent targets, so the coarse matrix can be read off directly.
  const Matrix between = realize(p.transition).gammas[1];
  Matrix coarse(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) coarse(a, b) = between(3 * a, 3 * b);

  std::mt19937_64 rng(29);
  SimResult s = simulate(p, 60000, rng);
  Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
  for (long t = 1; t < 60000; ++t)
    if (s.y(t - 1, 1) == 1.0)
      counts(s.states[static_cast<std::size_t>(t - 1)] / 3, s.states[static_cast<std::size_t>(t)] / 3) += 1.0;
  for (int a = 0; a < 3; ++a) {
    const double na = counts.row(a).sum();
    REQUIRE(na > 50.0);
    for (int b = 0; b < 3; ++b) {
      const double sd = std::sqrt(na * coarse(a, b) * (1.0 - coarse(a, b)));
      CHECK(std::abs(counts(a, b) - na * coarse(a, b)) <= 4.0 * sd + 1.0);
    }
  }
}

TEST_CASE("boundary sequence is the lagged dive-end indicator") {
  Matrix y = Matrix::Zero(5, 2);
  y(1, 1) = 1.0;
  y(4, 1) = 1.0;
  std::vector<std::uint8_t> b = boundary_from_dive_ends(y);
  CHECK(b == std::vector<std::uint8_t>{0, 0, 1, 0, 0});
}

TEST_CASE("algorithm labels map to the documented configurations") {
  OptimizerConfig fe = algorithm_config("svrg-fe", 100);
  CHECK(fe.algo == Algo::SVRG);
  CHECK_FALSE(fe.partial_e);
  CHECK(fe.iters_per_update == 100);

  OptimizerConfig pe1 = algorithm_config("saga-pe1", 100);
  CHECK(pe1.algo == Algo::SAGA);
  CHECK(pe1.partial_e);
  CHECK(pe1.iters_per_update == 100);

  OptimizerConfig pe2 = algorithm_config("svrg-pe2", 100);
  CHECK(pe2.partial_e);
  CHECK(pe2.iters_per_update == 1000);

  // Default step sizes start at lambda = 1/(3 * 100/3) = 0.01 per block.
  StepSizes st;
  st.lhat_g = st.lhat_h = fe.lhat_init;
  CHECK(st.lambda_theta() == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(st.lambda_eta() == doctest::Approx(0.01).epsilon(1e-14));

  CHECK_THROWS_AS(algorithm_config("sgd", 100), ConfigError);
  CHECK_THROWS_AS(algorithm_config("svrg-pe3", 100), ConfigError);
}

TEST_CASE("benchmark matrix runs every cell and shares initializations") {
  BenchmarkConfig cfg;
  cfg.T = 200;
  cfg.n = 2;
  cfg.d = 1;
  cfg.datasets = 1;
  cfg.inits = 2;
  cfg.algorithms = {"svrg-fe", "gd"};
  cfg.max_updates = 5;
  cfg.grad_tol = 0.0;
  cfg.threads = 2;
  std::vector<BenchmarkRow> rows = benchmark_matrix(cfg);
  REQUIRE(rows.size() == 4);
  std::set<std::string> experiments;
  for (const auto& r : rows) {
    CHECK_FALSE(r.failed);
    CHECK(std::isfinite(r.loglik));
    CHECK(r.epochs > 0.0);
    experiments.insert(r.experiment);
  }
  CHECK(experiments.size() == 2);  // one per initialization
}
