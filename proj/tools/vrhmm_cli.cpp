// Command-line front end: simulate / fit / benchmark / decode.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrhmm/io.hpp"
#include "vrhmm/simkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vrhmm;

namespace {

// Flat key=value config files, '#' comments.
std::map<std::string, std::string> parse_config(const std::string& path, std::string& raw) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  raw = buf.str();

  std::map<std::string, std::string> kv;
  std::istringstream ss(raw);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string get(const std::map<std::string, std::string>& kv, const std::string& key,
                const std::string& dflt) {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

long get_long(const std::map<std::string, std::string>& kv, const std::string& key, long dflt) {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
  }
}

double get_double(const std::map<std::string, std::string>& kv, const std::string& key,
                  double dflt) {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + it->second);
  }
}

void write_manifest(const std::string& out_dir, const std::string& config_text,
                    std::uint64_t seed, double wall_sec, double epochs,
                    const std::vector<std::string>& outputs) {
  json m;
  m["config_hash"] = std::hash<std::string>{}(config_text);
  m["seed"] = seed;
  m["version"] = "0.1.0";
  m["wall_clock_sec"] = wall_sec;
  m["epochs"] = epochs;
  m["outputs"] = outputs;
  write_text(out_dir + "/manifest.json", m.dump(2) + "\n");
}

void check_finite(const Matrix& y, const std::string& path) {
  if (!y.allFinite()) throw DataError("non-finite values in " + path);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  Timer timer;
  std::string raw;
  auto kv = parse_config(config_path, raw);
  const std::string kind = get(kv, "kind", "benchmark");
  const long T = get_long(kv, "T", 1000);
  const std::uint64_t seed = static_cast<std::uint64_t>(get_long(kv, "seed", 1));
  if (T < 2) throw ConfigError("T must be at least 2");
  fs::create_directories(out_dir);

  std::mt19937_64 rng(seed);
  HmmParams gen = [&]() {
    if (kind == "benchmark") {
      const int n = static_cast<int>(get_long(kv, "N", 3));
      const int d = static_cast<int>(get_long(kv, "d", 3));
      if (n < 2) throw ConfigError("N must be at least 2");
      if (d < 1) throw ConfigError("d must be at least 1");
      return benchmark_generator(n, d, T, rng);
    }
    if (kind == "dive") return dive_generator();
    throw ConfigError("unknown kind '" + kind + "' (expected benchmark or dive)");
  }();

  SimResult sim = simulate(gen, T, rng);

  std::string obs_header;
  if (kind == "dive") {
    obs_header = "depth_change,dive_end";
  } else {
    for (Eigen::Index j = 0; j < sim.y.cols(); ++j)
      obs_header += (j ? ",y" : "y") + std::to_string(j + 1);
  }
  write_csv(out_dir + "/observations.csv", sim.y, obs_header);

  Matrix st(T, 2);
  for (long t = 0; t < T; ++t) {
    st(t, 0) = static_cast<double>(t);
    st(t, 1) = sim.states[static_cast<std::size_t>(t)];
  }
  write_csv(out_dir + "/states.csv", st, "t,state");
  write_params(out_dir + "/generator_params.json", gen);
  write_manifest(out_dir, raw, seed, timer.seconds(), 0.0,
                 {out_dir + "/observations.csv", out_dir + "/states.csv",
                  out_dir + "/generator_params.json"});
  return 0;
}

struct FitFlags {
  std::string data, out, algorithm = "svrg", model = "gaussian", init_params;
  bool partial_e = false, halve_on_success = false, no_line_search = false;
  long iters = 0;
  int updates = 100, states = 2, attempt_cap = 50;
  double grad_tol = 1e-2, time_budget = 0.0;
  std::uint64_t seed = 1;
};

int cmd_fit(const FitFlags& f) {
  Timer timer;
  if (f.algorithm != "svrg" && f.algorithm != "saga" && f.algorithm != "gd")
    throw ConfigError("unknown --algorithm '" + f.algorithm + "' (svrg, saga, or gd)");
  if (f.algorithm == "gd" && f.partial_e)
    throw ConfigError("--partial-e applies only to the stochastic algorithms, not gd");
  if (f.model != "gaussian" && f.model != "dive")
    throw ConfigError("unknown --model '" + f.model + "' (gaussian or dive)");

  Matrix y = read_csv(f.data);
  check_finite(y, f.data);
  fs::create_directories(f.out);

  std::mt19937_64 rng(f.seed);
  HmmParams start = [&]() {
    if (!f.init_params.empty()) return read_params(f.init_params);
    if (f.model == "dive") return dive_init(y, rng);
    if (f.states < 2) throw ConfigError("--states must be at least 2");
    return benchmark_init(y, f.states, rng);
  }();
  if (f.model == "dive" && !std::holds_alternative<DiveEmission>(start.emission))
    throw ConfigError("--model dive but the initial parameters are a gaussian model");
  attach_boundary(start, y);
  if (y.cols() != obs_dim(start.emission))
    throw ConfigError("model expects " + std::to_string(obs_dim(start.emission)) +
                      " observation columns, data has " + std::to_string(y.cols()));

  OptimizerConfig cfg;
  cfg.algo = f.algorithm == "saga" ? Algo::SAGA : Algo::SVRG;
  cfg.partial_e = f.partial_e;
  cfg.iters_per_update = f.iters;
  cfg.max_updates = f.updates;
  cfg.grad_tol = f.grad_tol;
  cfg.attempt_cap = f.attempt_cap;
  cfg.halve_on_success = f.halve_on_success;
  cfg.line_search = !f.no_line_search;
  cfg.seed = f.seed;
  cfg.max_epochs = f.time_budget;

  std::vector<TraceRow> live_trace;
  cfg.trace_sink = &live_trace;

  const std::string trace_path = f.out + "/trace.csv";
  try {
    FitResult res = f.algorithm == "gd" ? baseline_gd(std::move(start), y, cfg)
                                        : em_vrso(std::move(start), y, cfg);
    write_params(f.out + "/params.json", res.params);
    write_trace_csv(trace_path, res.trace);
    write_manifest(f.out, f.data + "|" + f.algorithm, f.seed, timer.seconds(), res.epochs,
                   {f.out + "/params.json", trace_path});
    std::cout << "loglik " << std::setprecision(12) << res.loglik << " epochs " << res.epochs
              << (res.converged ? " converged" : " not-converged") << "\n";
    return 0;
  } catch (const NumericError&) {
    write_trace_csv(trace_path, live_trace);
    write_manifest(f.out, f.data + "|" + f.algorithm, f.seed, timer.seconds(),
                   live_trace.empty() ? 0.0 : live_trace.back().epochs, {trace_path});
    throw;
  }
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir) {
  Timer timer;
  std::string raw;
  auto kv = parse_config(config_path, raw);

  BenchmarkConfig cfg;
  cfg.T = get_long(kv, "T", 1000);
  cfg.n = static_cast<int>(get_long(kv, "N", 3));
  cfg.d = static_cast<int>(get_long(kv, "d", 3));
  cfg.datasets = static_cast<int>(get_long(kv, "datasets", 5));
  cfg.inits = static_cast<int>(get_long(kv, "inits", 5));
  cfg.max_updates = static_cast<int>(get_long(kv, "max_updates", 200));
  cfg.max_epochs = get_double(kv, "max_epochs", 0.0);
  cfg.grad_tol = get_double(kv, "grad_tol", 1e-2);
  cfg.seed = static_cast<std::uint64_t>(get_long(kv, "seed", 1));
  cfg.threads = static_cast<int>(get_long(kv, "threads", 4));
  const std::string algos = get(kv, "algorithms", "");
  if (!algos.empty()) {
    std::istringstream ss(algos);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.algorithms.push_back(tok);
  }

  fs::create_directories(out_dir);
  std::vector<BenchmarkRow> rows = benchmark_matrix(cfg);

  // Gap to the best run over the same dataset (shared across inits/algorithms).
  std::map<std::string, double> best;
  for (const auto& r : rows) {
    if (r.failed) continue;
    const std::string ds = r.experiment.substr(0, r.experiment.find("-init"));
    auto it = best.find(ds);
    if (it == best.end() || r.loglik > it->second) best[ds] = r.loglik;
  }

  std::ostringstream out;
  out << std::setprecision(17);
  out << "# experiment,algorithm,P,M,seed,converged,epochs_to_converge,loglik,loglik_gap_over_T,error\n";
  int ok = 0;
  for (const auto& r : rows) {
    const std::string ds = r.experiment.substr(0, r.experiment.find("-init"));
    out << r.experiment << ',' << r.algorithm << ',' << (r.partial_e ? 1 : 0) << ',' << r.iters
        << ',' << r.seed << ',';
    if (r.failed) {
      out << ",,,," << r.error << '\n';
      continue;
    }
    ++ok;
    out << (r.converged ? 1 : 0) << ',';
    if (r.converged)
      out << r.epochs;
    out << ',' << r.loglik << ','
        << (best.at(ds) - r.loglik) / static_cast<double>(cfg.T) << ",\n";
  }
  write_text(out_dir + "/benchmark.csv", out.str());
  write_manifest(out_dir, raw, cfg.seed, timer.seconds(), 0.0, {out_dir + "/benchmark.csv"});
  if (ok == 0) throw NumericError("every benchmark cell failed");
  std::cout << ok << "/" << rows.size() << " cells succeeded\n";
  return 0;
}

int cmd_decode(const std::string& data_path, const std::string& params_path,
               const std::string& out_dir) {
  Timer timer;
  Matrix y = read_csv(data_path);
  check_finite(y, data_path);
  HmmParams params = read_params(params_path);
  attach_boundary(params, y);
  if (y.cols() != obs_dim(params.emission))
    throw ConfigError("model expects " + std::to_string(obs_dim(params.emission)) +
                      " observation columns, data has " + std::to_string(y.cols()));
  fs::create_directories(out_dir);

  PosteriorCache cache = e_step(params, y);
  std::vector<int> states = posterior_decode(cache);
  const long T = y.rows();
  const int N = static_cast<int>(cache.gamma.cols());
  const bool dive = std::holds_alternative<DiveEmission>(params.emission);

  std::ostringstream out;
  out << std::setprecision(17);
  out << "# t";
  for (int i = 1; i <= N; ++i) out << ",gamma_" << i;
  out << ",state";
  if (dive) out << ",dive_id,dive_type,phase";
  out << '\n';
  long dive_id = 0;
  const std::vector<std::uint8_t> boundary = dive ? boundary_from_dive_ends(y)
                                                  : std::vector<std::uint8_t>();
  for (long t = 0; t < T; ++t) {
    out << t;
    for (int i = 0; i < N; ++i) out << ',' << cache.gamma(t, i);
    const int s = states[static_cast<std::size_t>(t)];
    out << ',' << s;
    if (dive) {
      if (t > 0 && boundary[static_cast<std::size_t>(t)]) ++dive_id;
      out << ',' << dive_id << ',' << s / 3 << ',' << s % 3;
    }
    out << '\n';
  }
  write_text(out_dir + "/decoded.csv", out.str());
  write_manifest(out_dir, data_path + "|" + params_path, 0, timer.seconds(), 1.0,
                 {out_dir + "/decoded.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced stochastic EM for hidden Markov models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_path, params_path;
  FitFlags fit;

  auto* sim = app.add_subcommand("simulate", "Sample synthetic data from a generating model");
  sim->add_option("--config", config_path, "key=value config file")->required();
  sim->add_option("--out", out_dir, "output directory")->required();

  auto* fitc = app.add_subcommand("fit", "Fit an HMM by stochastic or full-batch EM");
  fitc->add_option("--data", fit.data, "observations CSV")->required();
  fitc->add_option("--out", fit.out, "output directory")->required();
  fitc->add_option("--algorithm", fit.algorithm, "svrg, saga, or gd");
  fitc->add_flag("--partial-e", fit.partial_e, "interleave partial E updates in the M step");
  fitc->add_option("--iters-per-update", fit.iters, "stochastic iterations per M step (0 = T)");
  fitc->add_option("--updates", fit.updates, "maximum outer iterations");
  fitc->add_option("--seed", fit.seed, "RNG seed");
  fitc->add_option("--time-budget", fit.time_budget, "epoch budget (0 = unlimited)");
  fitc->add_option("--model", fit.model, "gaussian or dive");
  fitc->add_option("--states", fit.states, "state count for random gaussian inits");
  fitc->add_option("--init-params", fit.init_params, "JSON file with initial parameters");
  fitc->add_option("--grad-tol", fit.grad_tol, "convergence tolerance on |grad log p|/T");
  fitc->add_option("--attempt-cap", fit.attempt_cap, "M-step attempts per outer iteration");
  fitc->add_flag("--halve-on-success", fit.halve_on_success,
                 "halve the step size after accepted attempts instead of failed ones");
  fitc->add_flag("--no-line-search", fit.no_line_search, "freeze the Lipschitz estimates");

  auto* bench = app.add_subcommand("benchmark", "Run the algorithm-comparison matrix");
  bench->add_option("--config", config_path, "key=value config file")->required();
  bench->add_option("--out", out_dir, "output directory")->required();

  auto* dec = app.add_subcommand("decode", "Posterior-decode a data set under fitted parameters");
  dec->add_option("--data", data_path, "observations CSV")->required();
  dec->add_option("--params", params_path, "parameters JSON")->required();
  dec->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir);
    if (fitc->parsed()) return cmd_fit(fit);
    if (bench->parsed()) return cmd_benchmark(config_path, out_dir);
    if (dec->parsed()) return cmd_decode(data_path, params_path, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
