// Command-line front end: forward solve, stochastic simulation, inverse
// identification, batch study, and bundle-vs-bundle metrics.

#include <CLI11.hpp>

#include <lqgame/io/config.hpp>
#include <lqgame/io/csv.hpp>
#include <lqgame/lqgame.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lqgame;

namespace {

// 0 ok, 2 config/validation, 3 numerical failure, 4 identifiability
// failure, 5 I/O.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericalError = 3,
  kIdentifiabilityError = 4,
  kIoError = 5,
};

struct StageError {
  int code;
  std::string stage;
  std::string what;
};

[[noreturn]] void fail(int code, const std::string& stage,
                       const std::string& what) {
  throw StageError{code, stage, what};
}

int classify(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kIoError;
  if (dynamic_cast<const IdentifiabilityError*>(&e)) return kIdentifiabilityError;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumericalError;
  return kConfigError;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
};

io::ConfigFile load_config_checked(const std::string& path) {
  try {
    return io::load_config(path);
  } catch (const IoError& e) {
    fail(fs::exists(path) ? kConfigError : kIoError, "config", e.what());
  }
}

void require_valid(const io::ConfigFile& cf, bool need_costs, bool need_noise) {
  if (need_costs && !cf.costs)
    fail(kConfigError, "validate", "config is missing the players section");
  if (need_noise && !cf.noise)
    fail(kConfigError, "validate", "config is missing system.L");
  if (cf.costs) {
    NoiseModel probe;
    if (cf.noise) {
      probe = *cf.noise;
    } else {
      probe.l = Vector::Constant(cf.game.state_dim(), 1.0);
      probe.dt = cf.game.dt();
    }
    const ValidationReport rep = validate(cf.game, *cf.costs, probe);
    if (!rep.ok()) {
      std::string all;
      for (const auto& v : rep.violations) all += "\n  " + v;
      fail(kConfigError, "validate", "invalid game definition:" + all);
    }
  }
}

RiccatiSolverConfig solver_options(int substeps, const std::string& integrator) {
  RiccatiSolverConfig cfg;
  cfg.substeps = substeps;
  if (integrator == "euler")
    cfg.integrator = RiccatiSolverConfig::Integrator::euler;
  else if (integrator != "rk4")
    fail(kConfigError, "config", "integrator must be rk4 or euler");
  return cfg;
}

int cmd_forward(const CommonOpts& opts, int substeps,
                const std::string& integrator) {
  const io::ConfigFile cf = load_config_checked(opts.config_path);
  require_valid(cf, /*need_costs=*/true, /*need_noise=*/false);

  StrategyProfile profile;
  try {
    profile = solve_coupled_riccati(cf.game, *cf.costs,
                                    solver_options(substeps, integrator));
  } catch (const std::exception& e) {
    fail(classify(e), "solve", e.what());
  }

  fs::create_directories(opts.out_dir);
  io::write_strategy_csv(fs::path(opts.out_dir) / "strategy.csv", profile);
  const StabilityReport stab = check_stability(profile);
  io::write_stability_csv(fs::path(opts.out_dir) / "stability.csv",
                          profile.grid, stab);
  std::cout << "stable: " << (stab.stable ? "true" : "false") << "\n";
  return kOk;
}

int cmd_simulate(const CommonOpts& opts, std::optional<std::uint64_t> seed,
                 std::optional<int> demos, const std::string& profile_path,
                 int substeps, const std::string& integrator) {
  const io::ConfigFile cf = load_config_checked(opts.config_path);
  require_valid(cf, /*need_costs=*/profile_path.empty(), /*need_noise=*/true);

  SimulationConfig sim;
  sim.demos = demos.value_or(cf.demos);
  sim.seed = seed.value_or(cf.seed);
  if (sim.demos < 1) fail(kConfigError, "config", "demo count must be >= 1");

  StrategyProfile profile;
  try {
    if (profile_path.empty()) {
      profile = solve_coupled_riccati(cf.game, *cf.costs,
                                      solver_options(substeps, integrator));
    } else {
      profile = io::read_strategy_csv(profile_path);
      if (profile.num_nodes() != cf.game.steps + 1)
        fail(kConfigError, "config", "profile grid does not match the config");
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    fail(classify(e), "solve", e.what());
  }

  TrajectoryBundle bundle;
  try {
    bundle = simulate_bundle(cf.game, profile, *cf.noise, sim);
  } catch (const std::exception& e) {
    fail(classify(e), "simulate", e.what());
  }
  io::write_bundle(opts.out_dir, bundle, io::hash_file(opts.config_path));
  std::cout << "bundle: " << opts.out_dir << " (" << sim.demos
            << " demonstrations, seed " << sim.seed << ")\n";
  return kOk;
}

int cmd_invert(const CommonOpts& opts, const std::string& bundle_dir,
               std::optional<int> nodes, double cond_threshold) {
  // Only the system matrices, horizon and x0 are read; cost and noise
  // entries in the config are withheld information for this command.
  const io::ConfigFile cf = load_config_checked(opts.config_path);
  const GameDefinition& game = cf.game;

  TrajectoryBundle bundle;
  try {
    bundle = io::read_bundle(bundle_dir);
  } catch (const std::exception& e) {
    fail(classify(e), "bundle", e.what());
  }

  const int full_steps = bundle.num_nodes() - 1;
  const int K = nodes.value_or(full_steps);
  if (K < 1 || full_steps % K != 0)
    fail(kConfigError, "config",
         "--nodes must divide the bundle's " + std::to_string(full_steps) +
             " grid intervals");

  InverseSolution sol;
  GameDefinition coarse = game.with_steps(K);
  try {
    const TrajectoryBundle sub = subsample(bundle, full_steps / K);
    sol = run_inverse_pipeline(coarse, sub, cond_threshold);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    fail(classify(e), "invert", e.what());
  }

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  {
    json estimated = io::config_to_json(game, &sol.costs, &sol.noise.noise,
                                        bundle.demo_count(), bundle.seed);
    std::ofstream f(out / "estimated.json");
    if (!f) fail(kIoError, "write", "cannot write estimated.json");
    f << estimated.dump(2) << "\n";
  }
  io::write_excitation_csv(out / "excitation.csv", sol.gains.grid,
                           sol.excitation);
  json diag;
  diag["t_C"] = sol.t_C;
  diag["K_eval"] = K;
  diag["offdiag_ratio"] = sol.noise.offdiag_ratio;
  for (int i = 0; i < game.num_players(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "singular_values_player_%d.csv", i + 1);
    io::write_singular_values_csv(out / name, sol.null_space[i].singular_values);
    json pd;
    pd["rank"] = sol.null_space[i].rank;
    pd["rank_consistent"] = sol.null_space[i].rank_consistent;
    pd["gap_ratio"] = sol.null_space[i].gap_ratio;
    pd["violations"] = sol.cost_violations[i];
    diag["players"].push_back(pd);
  }
  {
    std::ofstream f(out / "diagnostics.json");
    if (!f) fail(kIoError, "write", "cannot write diagnostics.json");
    f << diag.dump(2) << "\n";
  }
  std::cout << "t_C: " << sol.t_C << " s\n";
  return kOk;
}

json study_row_to_json(const StudyRow& r) {
  json j;
  j["K"] = r.K;
  j["rep"] = r.rep;
  j["gt_seed"] = r.gt_seed;
  j["est_seed"] = r.est_seed;
  j["ok"] = r.ok;
  if (r.ok) {
    j["e_mu_x"] = r.err.e_mu_x;
    j["e_mu_u"] = r.err.e_mu_u;
    j["e_var_x"] = r.err.e_var_x;
    j["e_var_u"] = r.err.e_var_u;
    j["t_C"] = r.err.t_C;
  } else {
    j["failure"] = r.failure;
  }
  return j;
}

StudyRow study_row_from_json(const json& j) {
  StudyRow r;
  r.K = j.at("K").get<int>();
  r.rep = j.at("rep").get<int>();
  r.gt_seed = j.at("gt_seed").get<std::uint64_t>();
  r.est_seed = j.at("est_seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  if (r.ok) {
    r.err.e_mu_x = j.at("e_mu_x").get<double>();
    r.err.e_mu_u = j.at("e_mu_u").get<double>();
    r.err.e_var_x = j.at("e_var_x").get<double>();
    r.err.e_var_u = j.at("e_var_u").get<double>();
    r.err.t_C = j.at("t_C").get<double>();
    r.err.K_eval = r.K;
    r.err.repetition = r.rep;
    r.err.seed = r.gt_seed;
  } else {
    r.failure = j.value("failure", "");
  }
  return r;
}

int cmd_study(const CommonOpts& opts, std::optional<int> reps,
              std::optional<std::uint64_t> seed) {
  const io::ConfigFile cf = load_config_checked(opts.config_path);
  require_valid(cf, /*need_costs=*/true, /*need_noise=*/true);

  StudyConfig study;
  study.demos = cf.demos;
  study.base_seed = cf.seed;
  const json raw = io::load_json(opts.config_path);
  if (raw.contains("study")) {
    const json& sj = raw.at("study");
    if (sj.contains("K_values"))
      study.K_values = sj.at("K_values").get<std::vector<int>>();
    study.repetitions = sj.value("repetitions", study.repetitions);
    study.demos = sj.value("demos", study.demos);
    study.base_seed = sj.value("base_seed", study.base_seed);
    study.cond_threshold = sj.value("cond_threshold", study.cond_threshold);
  }
  if (reps) study.repetitions = *reps;
  if (seed) study.base_seed = *seed;
  study.threads = opts.threads;
  for (int K : study.K_values)
    if (K < 1 || cf.game.steps % K != 0)
      fail(kConfigError, "config",
           "study K value " + std::to_string(K) +
               " must divide the grid interval count");

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  const fs::path manifest_path = out / "study_manifest.json";
  const std::string config_hash = io::hash_file(opts.config_path);

  // Resume: completed (K, rep) cells from a matching previous run are kept.
  std::vector<StudyRow> rows;
  std::set<std::pair<int, int>> done;
  if (fs::exists(manifest_path)) {
    try {
      const json m = io::load_json(manifest_path);
      if (m.value("config_hash", "") == config_hash) {
        for (const auto& rj : m.at("rows")) {
          StudyRow r = study_row_from_json(rj);
          if (done.emplace(r.K, r.rep).second) rows.push_back(std::move(r));
        }
        std::cout << "resuming: " << rows.size() << " completed cells\n";
      }
    } catch (const std::exception&) {
      // Unreadable manifest: start over.
      rows.clear();
      done.clear();
    }
  }

  std::vector<std::pair<int, int>> todo;
  for (int K : study.K_values)
    for (int rep = 1; rep <= study.repetitions; ++rep)
      if (!done.count({K, rep})) todo.emplace_back(K, rep);

  std::vector<StudyRow> fresh(todo.size());
  std::vector<EnvelopeSeries> envelopes(todo.size());
  const int workers = std::max(1, study.threads);
  auto work = [&](int w) {
    for (size_t idx = w; idx < todo.size(); idx += workers) {
      const auto [K, rep] = todo[idx];
      fresh[idx] = run_study_cell(cf.game, *cf.costs, *cf.noise, K, rep, study,
                                  rep == 1 ? &envelopes[idx] : nullptr);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  for (size_t idx = 0; idx < todo.size(); ++idx) {
    rows.push_back(fresh[idx]);
    if (fresh[idx].rep == 1 && fresh[idx].ok) {
      char name[32];
      std::snprintf(name, sizeof(name), "figure1_K%d.csv", fresh[idx].K);
      io::write_envelopes_csv(out / name, envelopes[idx]);
    }
  }
  std::sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) {
    return std::tie(a.K, a.rep) < std::tie(b.K, b.rep);
  });

  json manifest;
  manifest["schema"] = "lqgame-study";
  manifest["config_hash"] = config_hash;
  manifest["rows"] = json::array();
  for (const auto& r : rows) manifest["rows"].push_back(study_row_to_json(r));
  {
    std::ofstream f(manifest_path);
    if (!f) fail(kIoError, "write", "cannot write study manifest");
    f << manifest.dump(2) << "\n";
  }

  io::write_study_rows_csv(out / "study_rows.csv", rows);
  io::write_study_failures_csv(out / "study_failures.csv", rows);
  const auto averages = average_study_rows(rows, study.K_values);
  io::write_study_averages_csv(out / "study_averages.csv", averages);

  std::cout << "K,e_mu_x,e_mu_u,e_var_x,e_var_u,t_C\n";
  for (const auto& a : averages)
    std::cout << a.K << "," << a.e_mu_x << "," << a.e_mu_u << "," << a.e_var_x
              << "," << a.e_var_u << "," << a.t_C << "\n";
  int failures = 0;
  for (const auto& r : rows)
    if (!r.ok) ++failures;
  if (failures > 0) std::cout << "failed cells: " << failures << "\n";
  return kOk;
}

int cmd_metrics(const CommonOpts& opts, const std::string& gt_dir,
                const std::string& est_dir) {
  TrajectoryBundle gt, est;
  try {
    gt = io::read_bundle(gt_dir);
    est = io::read_bundle(est_dir);
  } catch (const std::exception& e) {
    fail(classify(e), "bundle", e.what());
  }

  ErrorReport rep;
  try {
    rep = trajectory_errors(empirical_moments(gt), empirical_moments(est));
  } catch (const std::exception& e) {
    fail(classify(e), "metrics", e.what());
  }

  fs::create_directories(opts.out_dir);
  {
    auto outf = io::open_out(fs::path(opts.out_dir) / "metrics.csv");
    outf << "e_mu_x,e_mu_u,e_var_x,e_var_u\n"
         << io::fmt(rep.e_mu_x) << "," << io::fmt(rep.e_mu_u) << ","
         << io::fmt(rep.e_var_x) << "," << io::fmt(rep.e_var_u) << "\n";
  }
  std::cout << "e_mu_x: " << rep.e_mu_x << "\ne_mu_u: " << rep.e_mu_u
            << "\ne_var_x: " << rep.e_var_x << "\ne_var_u: " << rep.e_var_u
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward and inverse finite-horizon LQG differential games"};
  app.require_subcommand(1);

  CommonOpts opts;
  int substeps = 10;
  std::string integrator = "rk4";
  std::optional<std::uint64_t> seed;
  std::optional<int> demos, nodes, reps;
  std::string profile_path, bundle_dir, gt_dir, est_dir;
  double cond_threshold = 1e8;

  auto* forward = app.add_subcommand("forward", "solve the coupled Riccati equations");
  forward->add_option("--config", opts.config_path, "game config file")->required();
  forward->add_option("--out", opts.out_dir, "output directory");
  forward->add_option("--substeps", substeps, "integrator substeps per interval");
  forward->add_option("--integrator", integrator, "rk4 or euler");

  auto* simulate = app.add_subcommand("simulate", "generate a demonstration bundle");
  simulate->add_option("--config", opts.config_path)->required();
  simulate->add_option("--out", opts.out_dir);
  simulate->add_option("--seed", seed, "RNG seed (overrides config)");
  simulate->add_option("--demos", demos, "demonstration count (overrides config)");
  simulate->add_option("--profile", profile_path, "reuse a strategy.csv instead of solving");
  simulate->add_option("--substeps", substeps);
  simulate->add_option("--integrator", integrator);

  auto* invert = app.add_subcommand("invert", "recover cost and noise parameters from a bundle");
  invert->add_option("--bundle", bundle_dir, "bundle directory")->required();
  invert->add_option("--config", opts.config_path, "system config (costs/L ignored)")->required();
  invert->add_option("--out", opts.out_dir);
  invert->add_option("--nodes", nodes, "evaluated time steps K (default: full grid)");
  invert->add_option("--cond-threshold", cond_threshold, "excitation flag threshold");

  auto* study = app.add_subcommand("study", "batch accuracy study over K");
  study->add_option("--config", opts.config_path)->required();
  study->add_option("--out", opts.out_dir);
  study->add_option("--reps", reps, "repetitions per K (overrides config)");
  study->add_option("--seed", seed, "base seed (overrides config)");
  study->add_option("--threads", opts.threads, "worker threads");

  auto* metrics = app.add_subcommand("metrics", "moment errors between two bundles");
  metrics->add_option("--gt", gt_dir, "ground-truth bundle directory")->required();
  metrics->add_option("--est", est_dir, "estimated bundle directory")->required();
  metrics->add_option("--out", opts.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (forward->parsed()) return cmd_forward(opts, substeps, integrator);
    if (simulate->parsed())
      return cmd_simulate(opts, seed, demos, profile_path, substeps, integrator);
    if (invert->parsed()) return cmd_invert(opts, bundle_dir, nodes, cond_threshold);
    if (study->parsed()) return cmd_study(opts, reps, seed);
    if (metrics->parsed()) return cmd_metrics(opts, gt_dir, est_dir);
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage << "]: " << e.what << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
  return kConfigError;
}
