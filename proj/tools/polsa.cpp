// Command-line front end: config-driven experiment runner emitting CSV files.
//
// Subcommands: coupling, covariance, qlearn, td, variance, gen-mdp.
// Exit codes: 0 success, 1 config error, 2 numeric failure (divergence beyond
// the configured threshold fraction).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "polsa/harness.hpp"
#include "polsa/linear_model.hpp"
#include "polsa/mdp.hpp"
#include "polsa/rl_algos.hpp"
#include "polsa/variance.hpp"

namespace fs = std::filesystem;
using namespace polsa;

namespace {

constexpr int kExitConfigError = 1;
constexpr int kExitNumericFailure = 2;

std::ofstream open_csv(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw std::runtime_error("cannot open output file " + (dir / name).string());
  os << std::setprecision(17);
  return os;
}

/// "0.5:1.9:0.2" (start:stop:step, stop inclusive up to round-off) or a
/// comma-separated list "0.5,1.0,1.5".
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0, stop = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' ||
        step <= 0) {
      throw CLI::ValidationError("zeta", "expected start:stop:step, got '" + text + "'");
    }
    for (double z = start; z <= stop + 1e-12; z += step) out.push_back(z);
    return out;
  }
  std::istringstream is(text);
  std::string token;
  while (std::getline(is, token, ',')) {
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw CLI::ValidationError("zeta", "bad number '" + token + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("zeta", "empty grid");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string token;
  while (std::getline(is, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

/// Effective configuration of the invoked subcommand, echoed into the run
/// directory as flat key=value text; feeding it back through --config
/// reproduces the run (round-trip checked by the CLI smoke test).
void echo_config(const CLI::App& cmd, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream os(dir / "config_echo.ini");
  os << cmd.config_to_str(/*default_also=*/true, /*write_description=*/false);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Expands `--config FILE` in-place into `--key=value` tokens read from the
/// flat key=value file. Keys already present on the command line are skipped,
/// so explicit flags override file values. Done before CLI11 parsing because
/// CLI11 only processes config files attached to the top-level app, not to
/// subcommands.
void expand_config_args(std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size();) {
    std::string file;
    std::size_t erase_count = 0;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        throw std::invalid_argument("--config requires a file argument");
      }
      file = args[i + 1];
      erase_count = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      erase_count = 1;
    } else {
      ++i;
      continue;
    }
    std::ifstream is(file);
    if (!is) throw std::invalid_argument("cannot open config file '" + file + "'");
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + erase_count));
    std::vector<std::string> inserted;
    std::string line;
    while (std::getline(is, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("config line is not key=value: '" + line + "'");
      }
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      if (key.empty() || key == "config" || value.empty()) continue;
      const std::string flag = "--" + key;
      bool overridden = false;
      for (const std::string& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) {
          overridden = true;
          break;
        }
      }
      if (!overridden) inserted.push_back(flag + "=" + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i),
                inserted.begin(), inserted.end());
    i += inserted.size();
  }
}

void write_manifest(const fs::path& dir, std::uint64_t seed, int trials) {
  std::ofstream os(dir / "manifest.txt");
  os << "base_seed " << seed << "\n";
  os << "trials " << trials << "\n";
  os << "trial_seed_rule mix_seed(base_seed, trial_index)\n";
  for (int t = 0; t < trials; ++t) {
    os << "trial " << t << " seed " << mix_seed(seed, t) << "\n";
  }
}

void write_covariance_block(std::ofstream& os, const std::string& algorithm,
                            std::int64_t n, const std::string& block,
                            const Mat& estimate, const Mat& target,
                            const Mat& stderr_mat) {
  for (Eigen::Index i = 0; i < estimate.rows(); ++i) {
    for (Eigen::Index j = 0; j < estimate.cols(); ++j) {
      os << algorithm << "," << n << "," << block << "," << i << "," << j << ","
         << estimate(i, j) << ","
         << (target.size() > 0 ? target(i, j) : std::nan("")) << ","
         << (stderr_mat.size() > 0 ? stderr_mat(i, j) : std::nan("")) << "\n";
    }
  }
}

int check_divergence(double frac, double limit, const std::string& what) {
  if (frac > limit) {
    std::cerr << "numeric failure: " << what << " diverged in "
              << 100.0 * frac << "% of trials (limit " << 100.0 * limit << "%)\n";
    return kExitNumericFailure;
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_variance(const std::string& preset, const std::string& algorithm,
                 const fs::path& out_dir) {
  const LinearModelSpec spec = model_preset(preset);
  const ModelFacts f = facts(spec);
  const StabilityReport stab = check_stability(spec.a_mean, 1.0, &f.l_operator);

  std::cout << "model " << preset << " (d = " << spec.dim() << ")\n";
  std::cout << "eigenvalues of A:\n";
  for (std::size_t i = 0; i < stab.eigenvalues.size(); ++i) {
    std::cout << "  " << stab.eigenvalues[i]
              << "  Re<0: " << (stab.re_negative[i] ? "yes" : "no")
              << "  |1+zeta*lambda|<1: "
              << (stab.momentum_contractive[i] ? "yes" : "no") << "\n";
  }
  if (stab.l_spectral_radius) {
    std::cout << "spectral radius of L: " << *stab.l_spectral_radius << "\n";
  }
  std::cout << "stability: " << (stab.overall ? "pass" : "FAIL") << "\n";

  auto print_mat = [](const std::string& name, const Mat& m) {
    std::cout << name << " =\n" << m << "\n";
  };
  std::ofstream csv = open_csv(out_dir, "prediction.csv");
  csv << "block,i,j,value\n";
  auto dump = [&](const std::string& block, const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        csv << block << "," << i << "," << j << "," << m(i, j) << "\n";
  };
  if (algorithm == "polsa" || algorithm == "both") {
    const CovariancePrediction p = predict_polsa(spec.a_mean, spec.noise_cov);
    std::cout << "-- PolSA prediction --\n";
    print_mat("sigma_star", p.sigma_star);
    print_mat("sigma22", p.sigma22);
    dump("polsa.sigma_star", p.sigma_star);
    dump("polsa.sigma22", p.sigma22);
    dump("polsa.sigma11", p.sigma11);
  }
  if (algorithm == "nesa" || algorithm == "both") {
    const CovariancePrediction p = predict_nesa(f.l_operator, spec.a_mean, spec.noise_cov);
    std::cout << "-- NeSA prediction --\n";
    print_mat("sigma22", p.sigma22);
    print_mat("sigma11 (as displayed)", p.sigma11);
    print_mat("sigma11 (symmetrized)", p.sigma11_symmetrized);
    std::cout << "sigma11 PSD: " << (p.sigma11_psd ? "yes" : "no") << "\n";
    dump("nesa.sigma_star", p.sigma_star);
    dump("nesa.sigma22", p.sigma22);
    dump("nesa.sigma11", p.sigma11);
    dump("nesa.sigma11_symmetrized", p.sigma11_symmetrized);
  }
  return 0;
}

int run_coupling(const std::string& preset, const std::string& zeta_text,
                 double steps, int trials, std::uint64_t seed,
                 const fs::path& out_dir, double max_diverged, int threads) {
  const std::vector<double> zetas = parse_grid(zeta_text);
  const LinearModelSpec spec = model_preset(preset);
  std::ofstream csv = open_csv(out_dir, "coupling.csv");
  csv << "zeta,n,mean,median,diverged\n";
  write_manifest(out_dir, seed, trials);
  int exit_code = 0;
  std::cout << "coupling: preset " << preset << ", trials " << trials << "\n";
  for (double zeta : zetas) {
    LinearTrialPlan plan;
    plan.model = spec;
    plan.algorithms = {LinearAlgorithm::kSnrIdealized, LinearAlgorithm::kPolsaFixedA};
    plan.n_steps = static_cast<std::int64_t>(steps);
    plan.snapshots = geometric_snapshots(1, plan.n_steps);
    plan.trials = trials;
    plan.base_seed = seed;
    plan.zeta = zeta;
    const LinearRunResult result = run_linear_trials(plan, threads);
    const std::vector<CouplingStat> stats = coupling_stats(result, 0, 1);
    for (const CouplingStat& s : stats) {
      csv << zeta << "," << s.n << "," << s.mean << "," << s.median << ","
          << s.diverged << "\n";
    }
    const CouplingStat& last = stats.back();
    std::cout << "  zeta " << zeta << ": median n^2||theta-theta*||^2 at n="
              << last.n << " is " << last.median << " (" << last.diverged
              << " diverged)\n";
    exit_code = std::max(exit_code,
                         check_divergence(static_cast<double>(last.diverged) / trials,
                                          max_diverged,
                                          "coupling zeta=" + std::to_string(zeta)));
  }
  return exit_code;
}

int run_covariance(const std::string& preset, const std::string& algorithms_text,
                   double steps, int trials, std::uint64_t seed,
                   const fs::path& out_dir, double max_diverged, int threads) {
  const LinearModelSpec spec = model_preset(preset);
  const ModelFacts f = facts(spec);
  std::vector<LinearAlgorithm> algorithms;
  for (const std::string& name : split_list(algorithms_text)) {
    algorithms.push_back(linear_algorithm_from_name(name));
  }
  if (algorithms.empty()) throw CLI::ValidationError("algorithms", "empty list");

  LinearTrialPlan plan;
  plan.model = spec;
  plan.algorithms = algorithms;
  plan.n_steps = static_cast<std::int64_t>(steps);
  plan.snapshots = geometric_snapshots(10, plan.n_steps);
  plan.trials = trials;
  plan.base_seed = seed;
  const LinearRunResult result = run_linear_trials(plan, threads);

  std::ofstream csv = open_csv(out_dir, "covariance.csv");
  csv << "algorithm,n,block,i,j,estimate,target,stderr\n";
  write_manifest(out_dir, seed, trials);
  int exit_code = 0;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    const std::string name = linear_algorithm_name(algorithms[a]);
    const CovarianceReport report = estimate_covariance(result, a, f.theta_star);
    Mat target11, target22;
    if (algorithms[a] == LinearAlgorithm::kNesa) {
      const CovariancePrediction p = predict_nesa(f.l_operator, spec.a_mean, spec.noise_cov);
      target11 = p.sigma11;
      target22 = p.sigma22;
    } else if (algorithms[a] != LinearAlgorithm::kSa) {
      const CovariancePrediction p = predict_polsa(spec.a_mean, spec.noise_cov);
      target11 = p.sigma_star;
      target22 = algorithms[a] == LinearAlgorithm::kPolsaEstimated ||
                         algorithms[a] == LinearAlgorithm::kPolsaFixedA
                     ? p.sigma22
                     : p.sigma_star;
    }
    const Mat none;
    for (const CovarianceEstimate& est : report.estimates) {
      write_covariance_block(csv, name, est.n, "s11", est.sigma11, target11,
                             est.sigma11_stderr);
      write_covariance_block(csv, name, est.n, "s22", est.sigma22, target22,
                             est.sigma22_stderr);
      write_covariance_block(csv, name, est.n, "s21", est.sigma21, none, none);
    }
    const CovarianceEstimate& last = report.estimates.back();
    std::cout << name << " at n=" << last.n;
    if (target11.size() > 0) {
      std::cout << ": |s11 - target|_F / |target|_F = "
                << frobenius_relative_error(last.sigma11, target11);
    }
    std::cout << " (" << last.trials_diverged << " diverged)\n";
    exit_code = std::max(
        exit_code, check_divergence(static_cast<double>(last.trials_diverged) / trials,
                                    max_diverged, name));
  }
  return exit_code;
}

int run_qlearn(const std::string& mdp_preset_name, const std::string& mdp_file,
               const std::string& mode, const std::string& algorithms_text,
               double steps, int trials, std::uint64_t seed, const fs::path& out_dir,
               double watkins_gain, double max_diverged, int threads) {
  const Mdp mdp = mdp_file.empty() ? mdp_preset(mdp_preset_name) : load_mdp_file(mdp_file);
  const bool clock = mode == "clock";
  if (!clock && mode != "async") {
    throw CLI::ValidationError("mode", "expected clock or async");
  }
  QTrialPlan plan;
  plan.mdp = mdp;
  for (const std::string& name : split_list(algorithms_text)) {
    plan.algorithms.push_back(q_algorithm_from_name(name));
  }
  if (plan.algorithms.empty()) throw CLI::ValidationError("algorithms", "empty list");
  // Watkins with the d^{-1}I clock gain needs a larger step scale to make
  // progress at desk scale; other algorithms keep the plain 1/n schedule.
  for (QAlgorithm kind : plan.algorithms) {
    GainSchedule sched;
    if (kind == QAlgorithm::kWatkins && clock) {
      const double g = watkins_gain > 0
                           ? watkins_gain
                           : 3.0 * static_cast<double>(mdp.d()) * mdp.d();
      sched = {g, g};
    }
    plan.schedules.push_back(sched);
  }
  plan.clock_mode = clock;
  plan.n_steps = static_cast<std::int64_t>(steps);
  plan.snapshots = geometric_snapshots(10, plan.n_steps);
  plan.trials = trials;
  plan.base_seed = seed;
  const QRunResult result = run_q_trials(plan, threads);

  const QTable q_star = q_value_iteration(mdp);
  std::ofstream bellman_csv = open_csv(out_dir, "bellman.csv");
  bellman_csv << "algorithm,n,error\n";
  std::ofstream hist_csv = open_csv(out_dir, "hist.csv");
  hist_csv << "algorithm,trial,coordinate,value\n";
  write_manifest(out_dir, seed, trials);
  save_mdp_file(mdp, (out_dir / "mdp.txt").string());

  int exit_code = 0;
  const std::size_t last = result.snapshots.size() - 1;
  for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
    const std::string name = q_algorithm_name(plan.algorithms[a]);
    for (const BellmanPoint& point : bellman_trajectory(result, mdp, a)) {
      bellman_csv << name << "," << point.n << "," << point.error << "\n";
    }
    for (int i = 0; i < mdp.d(); ++i) {
      const std::vector<double> values =
          scaled_error_values(result, a, last, q_star, i);
      for (std::size_t t = 0; t < values.size(); ++t) {
        hist_csv << name << "," << t << "," << i << "," << values[t] << "\n";
      }
    }
    int diverged = 0;
    for (const TrialResult& trial : result.trials) {
      if (trial.per_algorithm[a].diverged) ++diverged;
    }
    const double final_error = bellman_trajectory(result, mdp, a).back().error;
    std::cout << name << ": Bellman error at n=" << result.snapshots.back()
              << " is " << final_error << " (" << diverged << " diverged)\n";
    exit_code = std::max(exit_code,
                         check_divergence(static_cast<double>(diverged) / trials,
                                          max_diverged, name));
  }
  return exit_code;
}

int run_td(double steps, int trials, std::uint64_t seed, int n_states, double beta,
           const fs::path& out_dir, double max_diverged, int threads) {
  TdTrialPlan plan;
  plan.model = cycle_chain_model(n_states, beta);
  plan.algorithms = {TdAlgorithm::kTd0, TdAlgorithm::kLstd0, TdAlgorithm::kPolsaTd0,
                     TdAlgorithm::kNesaTd0};
  // TD(0) with identity gain needs a larger step scale on slow chains; the
  // matrix-gain and momentum members keep 1/n.
  plan.schedules = {GainSchedule{10.0, 10.0}, GainSchedule{}, GainSchedule{},
                    GainSchedule{}};
  plan.n_steps = static_cast<std::int64_t>(steps);
  plan.snapshots = geometric_snapshots(10, plan.n_steps);
  plan.trials = trials;
  plan.base_seed = seed;
  // PolSA's limit is zeta-independent; the smaller momentum scale keeps
  // NeSA's asymptotic variance (linear in zeta) small on slow chains.
  plan.zeta = 0.2;
  const TdRunResult result = run_td_trials(plan, threads);

  std::ofstream csv = open_csv(out_dir, "td.csv");
  csv << "algorithm,n,error\n";
  write_manifest(out_dir, seed, trials);
  int exit_code = 0;
  for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
    const std::string name = td_algorithm_name(plan.algorithms[a]);
    int diverged = 0;
    for (std::size_t si = 0; si < result.snapshots.size(); ++si) {
      double err = 0.0;
      int used = 0;
      for (const TrialResult& trial : result.trials) {
        const AlgorithmTrace& trace = trial.per_algorithm[a];
        if (trace.diverged) continue;
        err += (trace.snapshots[si].theta - result.theta_star).norm();
        ++used;
      }
      if (used > 0) err /= used;
      csv << name << "," << result.snapshots[si] << "," << err << "\n";
      if (si + 1 == result.snapshots.size()) {
        diverged = trials - used;
        std::cout << name << ": ||theta - theta*|| at n=" << result.snapshots[si]
                  << " is " << err << " (" << diverged << " diverged)\n";
      }
    }
    exit_code = std::max(exit_code,
                         check_divergence(static_cast<double>(diverged) / trials,
                                          max_diverged, name));
  }
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic-approximation laboratory: momentum root-finding "
               "algorithms, covariance predictions, Q/TD-learning experiments"};
  app.require_subcommand(1);

  std::string preset = "fig2";
  std::string algorithms = "snr-ideal,polsa-fixed";
  std::string zeta_text = "0.5:1.9:0.2";
  std::string out_dir = "out";
  std::string mode = "clock";
  std::string mdp_name = "d19";
  std::string mdp_file;
  std::string variance_algorithm = "both";
  double steps = 1e5;
  int trials = 100;
  std::uint64_t seed = 7;
  int threads = 0;
  double max_diverged = 0.5;
  double watkins_gain = -1.0;
  int td_states = 6;
  double td_beta = 0.5;
  int nodes = 10;
  double edge_prob = 0.25;
  double success_prob = 0.8;
  double gen_beta = 0.8;
  std::string gen_out = "mdp.txt";

  // Echo defaults with real values so the echoed config is self-contained.
  app.option_defaults()->always_capture_default(true);

  // --config is consumed by expand_config_args() before CLI11 parsing; this
  // placeholder documents it in --help and is excluded from the echo.
  std::string config_file_doc;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file_doc,
                    "flat key=value config file; flags override file values")
        ->configurable(false);
  };
  auto add_common = [&](CLI::App* cmd) {
    add_config(cmd);
    cmd->add_option("--steps", steps, "iterations per trial");
    cmd->add_option("--trials", trials, "Monte-Carlo trials");
    cmd->add_option("--seed", seed, "base seed; trial t uses mix(seed, t)");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads,
                    "worker threads (0: POLSA_THREADS or hardware)");
    cmd->add_option("--max-diverged-frac", max_diverged,
                    "divergence fraction treated as numeric failure");
  };

  CLI::App* coupling = app.add_subcommand("coupling", "paired PolSA vs idealized SNR");
  coupling->add_option("--preset", preset, "linear model preset");
  coupling->add_option("--zeta", zeta_text, "grid start:stop:step or comma list");
  add_common(coupling);

  CLI::App* covariance = app.add_subcommand("covariance", "scaled covariance vs targets");
  covariance->add_option("--preset", preset, "linear model preset");
  covariance->add_option("--algorithms", algorithms, "comma list: sa,snr,snr-ideal,polsa,polsa-fixed,nesa");
  add_common(covariance);

  CLI::App* qlearn = app.add_subcommand("qlearn", "Q-learning benchmark on an MDP");
  qlearn->add_option("--mdp", mdp_name, "MDP preset: six, d19, d117");
  qlearn->add_option("--mdp-file", mdp_file, "MDP file (overrides --mdp)");
  qlearn->add_option("--mode", mode, "clock or async");
  qlearn->add_option("--algorithms", algorithms, "comma list: watkins,snr,polsa,polsad,nesa")
      ->default_val("watkins,snr,polsa,polsad,nesa");
  qlearn->add_option("--watkins-gain", watkins_gain,
                     "clock-mode Watkins gain g (alpha = g/(n+g)); <=0 uses 3 d^2");
  add_common(qlearn);

  CLI::App* td = app.add_subcommand("td", "TD(0) family on the cycle chain");
  td->add_option("--states", td_states, "chain length");
  td->add_option("--beta", td_beta, "discount factor");
  add_common(td);

  CLI::App* variance = app.add_subcommand("variance", "analytic covariance predictions");
  variance->add_option("--preset", preset, "linear model preset");
  variance->add_option("--algorithm", variance_algorithm, "polsa, nesa, or both");
  variance->add_option("--out", out_dir, "output directory");
  add_config(variance);

  CLI::App* gen_mdp = app.add_subcommand("gen-mdp", "generate and serialize a random-graph MDP");
  gen_mdp->add_option("--nodes", nodes, "node count");
  gen_mdp->add_option("--p", edge_prob, "edge probability");
  gen_mdp->add_option("--success-prob", success_prob, "move success probability");
  gen_mdp->add_option("--seed", seed, "generator seed");
  gen_mdp->add_option("--beta", gen_beta, "discount factor");
  gen_mdp->add_option("--out", gen_out, "output file");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    expand_config_args(args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    // CLI11's vector overload consumes tokens from the back.
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  try {
    const fs::path out(out_dir);
    if (coupling->parsed()) {
      echo_config(*coupling, out);
      // Coupling sweeps deliberately cross the stability boundary; divergence
      // there is a result, not a failure, unless the user tightens the limit.
      const double limit =
          coupling->count("--max-diverged-frac") > 0 ? max_diverged : 1.0;
      return run_coupling(preset, zeta_text, steps, trials, seed, out, limit,
                          threads);
    }
    if (covariance->parsed()) {
      echo_config(*covariance, out);
      return run_covariance(preset, algorithms, steps, trials, seed, out,
                            max_diverged, threads);
    }
    if (qlearn->parsed()) {
      echo_config(*qlearn, out);
      return run_qlearn(mdp_name, mdp_file, mode, algorithms, steps, trials, seed,
                        out, watkins_gain, max_diverged, threads);
    }
    if (td->parsed()) {
      echo_config(*td, out);
      return run_td(steps, trials, seed, td_states, td_beta, out, max_diverged,
                    threads);
    }
    if (variance->parsed()) {
      echo_config(*variance, out);
      return run_variance(preset, variance_algorithm, out);
    }
    if (gen_mdp->parsed()) {
      const Mdp mdp = random_graph_mdp(nodes, edge_prob, success_prob, seed, gen_beta);
      save_mdp_file(mdp, gen_out);
      std::cout << "wrote " << gen_out << " (d = " << mdp.d() << " state-action pairs, "
                << mdp.edges.size() << " edges)\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericFailure;
  }
  return kExitConfigError;
}
