#include "vrhmm/simkit.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace vrhmm {

namespace {

int sample_categorical(const Eigen::Ref<const Vector>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

SimResult simulate(const HmmParams& params, long T, std::mt19937_64& rng) {
  const RealizedTransitions realized = realize(params.transition);
  const bool dive = std::holds_alternative<DiveEmission>(params.emission);
  const int d = obs_dim(params.emission);

  SimResult out;
  out.y.resize(T, d);
  out.states.resize(static_cast<std::size_t>(T));

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  int s = sample_categorical(realized.delta, rng);
  bool prev_dive_end = false;
  for (long t = 0; t < T; ++t) {
    if (t > 0) {
      const Matrix& gamma =
          realized.gammas.size() > 1 && prev_dive_end ? realized.gammas[1] : realized.gammas[0];
      s = sample_categorical(gamma.row(s).transpose(), rng);
    }
    out.states[static_cast<std::size_t>(t)] = s;

    if (dive) {
      const auto& e = std::get<DiveEmission>(params.emission);
      out.y(t, 0) = e.mu[s] + std::exp(0.5 * e.rho[s]) * normal(rng);
      double p = 0.0;
      if (s % 3 == 2) p = 1.0 / (1.0 + std::exp(-e.logit_p[s / 3]));
      const bool end = unif(rng) < p;
      out.y(t, 1) = end ? 1.0 : 0.0;
      prev_dive_end = end;
    } else {
      const auto& e = std::get<DiagGaussianEmission>(params.emission);
      for (int j = 0; j < d; ++j)
        out.y(t, j) = e.mean(s, j) + std::exp(0.5 * e.log_var(s, j)) * normal(rng);
    }
  }
  return out;
}

HmmParams benchmark_generator(int n, int d, long T, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  DiagGaussianEmission em(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) em.mean(i, j) = normal(rng);
  em.log_var.setConstant(-2.0);

  // Constant diagonal keeps the expected number of transitions near 100.
  const double diag = T < 10000 ? 0.9 : 0.999;
  const double off = (1.0 - diag) / static_cast<double>(n - 1);
  HomogeneousTransition tr(n);
  const double off_logit = std::log(off / diag);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) tr.logits.eta_gamma(i, j) = off_logit;

  Vector delta(n);
  for (int i = 0; i < n; ++i) delta[i] = expo(rng);
  delta /= delta.sum();
  for (int i = 1; i < n; ++i) tr.logits.eta_delta[i] = std::log(delta[i] / delta[0]);

  return HmmParams{Emission{std::move(em)}, TransitionModel{std::move(tr)}};
}

HmmParams benchmark_init(const Matrix& y, int n, std::mt19937_64& rng) {
  const int d = static_cast<int>(y.cols());
  const long T = y.rows();
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector ybar = y.colwise().mean();
  Vector q(d);
  for (int j = 0; j < d; ++j) {
    q[j] = (y.col(j).array() - ybar[j]).square().sum() / static_cast<double>(T - 1);
    if (q[j] <= 0.0)
      throw ConfigError("observation column " + std::to_string(j) +
                        " is constant: cannot scale the initializer");
  }

  DiagGaussianEmission em(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) em.mean(i, j) = ybar[j] + std::sqrt(q[j]) * normal(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) em.log_var(i, j) = std::log(q[j]);

  HomogeneousTransition tr(n);
  for (int i = 1; i < n; ++i) tr.logits.eta_delta[i] = normal(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) tr.logits.eta_gamma(i, j) = -2.0 + 2.0 * normal(rng);

  return HmmParams{Emission{std::move(em)}, TransitionModel{std::move(tr)}};
}

HmmParams dive_generator() {
  DiveEmission em;
  const double mu[9] = {0.70, 0.02, -0.67, 0.33, 0.00, -0.44, 2.71, 0.01, -2.50};
  const double sigma[9] = {0.45, 0.23, 0.40, 0.15, 0.15, 0.21, 1.85, 0.64, 1.58};
  const double p_asc[3] = {0.12, 0.47, 0.04};
  for (int s = 0; s < 9; ++s) {
    em.mu[s] = mu[s];
    em.rho[s] = 2.0 * std::log(sigma[s]);
  }
  for (int i = 0; i < 3; ++i) em.logit_p[i] = logit(p_asc[i]);

  DiveTransition tr;
  const double gc[3][3] = {{0.223, 0.758, 0.017}, {0.123, 0.853, 0.027}, {0.074, 0.857, 0.068}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) tr.coarse(i, j) = std::log(gc[i][j] / gc[i][i]);

  const double gf[3][3][3] = {
      {{0.871, 0.123, 0.006}, {0.0, 0.962, 0.038}, {0.0, 0.0, 1.0}},
      {{0.668, 0.304, 0.028}, {0.0, 0.788, 0.212}, {0.0, 0.0, 1.0}},
      {{0.958, 0.040, 0.002}, {0.0, 0.982, 0.018}, {0.0, 0.0, 1.0}}};
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) tr.fine[b](i, j) = std::log(gf[b][i][j] / gf[b][i][i]);

  const double dc[3] = {0.258, 0.002, 0.740};
  tr.delta[1] = std::log(dc[1] / dc[0]);
  tr.delta[2] = std::log(dc[2] / dc[0]);

  return HmmParams{Emission{std::move(em)}, TransitionModel{std::move(tr)}};
}

HmmParams dive_init(const Matrix& y, std::mt19937_64& rng) {
  if (y.cols() != 2) throw DataError("dive data needs two columns (depth change, dive end)");
  const long T = y.rows();
  std::normal_distribution<double> normal(0.0, 1.0);

  const double dbar = y.col(0).mean();
  const double s2 = (y.col(0).array() - dbar).square().sum() / static_cast<double>(T - 1);
  if (s2 <= 0.0) throw ConfigError("depth-change column is constant: cannot scale the initializer");
  const double s = std::sqrt(s2);
  const double ebar = y.col(1).mean();
  if (ebar <= 0.0 || ebar >= 1.0)
    throw ConfigError("dive-end column must contain both zeros and ones");

  DiveEmission em;
  for (int i = 0; i < 9; ++i) {
    em.mu[i] = dbar + s * normal(rng);
    em.rho[i] = 2.0 * (std::log(s) + normal(rng));
  }
  for (int i = 0; i < 3; ++i) em.logit_p[i] = logit(ebar) + normal(rng);

  DiveTransition tr;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) tr.coarse(i, j) = -3.0 + normal(rng);
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) tr.fine[b](i, j) = -1.0 + normal(rng);
  tr.delta[1] = normal(rng);
  tr.delta[2] = normal(rng);

  return HmmParams{Emission{std::move(em)}, TransitionModel{std::move(tr)}};
}

std::vector<std::uint8_t> boundary_from_dive_ends(const Matrix& y) {
  const long T = y.rows();
  std::vector<std::uint8_t> b(static_cast<std::size_t>(T), 0);
  for (long t = 1; t < T; ++t) b[static_cast<std::size_t>(t)] = y(t - 1, 1) > 0.5 ? 1 : 0;
  return b;
}

void attach_boundary(HmmParams& params, const Matrix& y) {
  if (auto* tr = std::get_if<DiveTransition>(&params.transition))
    tr->boundary = std::make_shared<const std::vector<std::uint8_t>>(boundary_from_dive_ends(y));
}

OptimizerConfig algorithm_config(const std::string& label, long T) {
  OptimizerConfig cfg;
  if (label == "gd") return cfg;  // algo/partial_e unused by the baseline
  std::string base = label.substr(0, label.find('-'));
  std::string mode = label.find('-') == std::string::npos ? "" : label.substr(label.find('-') + 1);
  if (base == "svrg")
    cfg.algo = Algo::SVRG;
  else if (base == "saga")
    cfg.algo = Algo::SAGA;
  else
    throw ConfigError("unknown algorithm '" + label + "'");
  if (mode == "fe") {
    cfg.partial_e = false;
    cfg.iters_per_update = T;
  } else if (mode == "pe1") {
    cfg.partial_e = true;
    cfg.iters_per_update = T;
  } else if (mode == "pe2") {
    cfg.partial_e = true;
    cfg.iters_per_update = 10 * T;
  } else {
    throw ConfigError("unknown algorithm '" + label + "'");
  }
  return cfg;
}

std::vector<BenchmarkRow> benchmark_matrix(const BenchmarkConfig& cfg) {
  static const std::vector<std::string> kAll = {"svrg-fe", "svrg-pe1", "svrg-pe2",
                                                "saga-fe", "saga-pe1", "saga-pe2", "gd"};
  const std::vector<std::string>& algos = cfg.algorithms.empty() ? kAll : cfg.algorithms;
  for (const auto& a : algos) algorithm_config(a, cfg.T);  // validate before running

  struct Cell {
    int dataset;
    int init;
    const std::string* algo;
  };

  std::vector<Matrix> data(static_cast<std::size_t>(cfg.datasets));
  std::vector<std::vector<HmmParams>> starts;
  for (int ds = 0; ds < cfg.datasets; ++ds) {
    std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(ds));
    HmmParams gen = benchmark_generator(cfg.n, cfg.d, cfg.T, rng);
    data[static_cast<std::size_t>(ds)] = simulate(gen, cfg.T, rng).y;
    std::vector<HmmParams> inits;
    for (int in = 0; in < cfg.inits; ++in)
      inits.push_back(benchmark_init(data[static_cast<std::size_t>(ds)], cfg.n, rng));
    starts.push_back(std::move(inits));
  }

  std::vector<Cell> cells;
  for (int ds = 0; ds < cfg.datasets; ++ds)
    for (int in = 0; in < cfg.inits; ++in)
      for (const auto& a : algos) cells.push_back({ds, in, &a});

  std::vector<BenchmarkRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& c = cells[i];
      BenchmarkRow& row = rows[i];
      row.experiment = "T" + std::to_string(cfg.T) + "-n" + std::to_string(cfg.n) + "-d" +
                       std::to_string(cfg.d) + "-ds" + std::to_string(c.dataset) + "-init" +
                       std::to_string(c.init);
      row.algorithm = *c.algo;
      row.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(c.dataset) * 101ULL +
                 static_cast<std::uint64_t>(c.init) * 13ULL + i;
      try {
        OptimizerConfig oc = algorithm_config(*c.algo, cfg.T);
        oc.max_updates = cfg.max_updates;
        oc.max_epochs = cfg.max_epochs;
        oc.grad_tol = cfg.grad_tol;
        oc.seed = row.seed;
        row.partial_e = *c.algo != "gd" && oc.partial_e;
        row.iters = *c.algo == "gd" ? 0 : oc.iters_per_update;
        const Matrix& y = data[static_cast<std::size_t>(c.dataset)];
        HmmParams start = starts[static_cast<std::size_t>(c.dataset)][static_cast<std::size_t>(c.init)];
        FitResult res = *c.algo == "gd" ? baseline_gd(std::move(start), y, oc)
                                        : em_vrso(std::move(start), y, oc);
        row.converged = res.converged;
        row.epochs = res.epochs;
        row.loglik = res.loglik;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  };

  const int nthreads = std::max(1, cfg.threads);
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return rows;
}

}  // namespace vrhmm
