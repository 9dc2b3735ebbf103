#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "lqgame/metrics.hpp"
#include "lqgame/pipeline.hpp"
#include "lqgame/riccati.hpp"
#include "lqgame/simulate.hpp"

namespace lqgame {

struct StudyConfig {
  std::vector<int> K_values{20, 50, 100, 500};  // evaluated time steps
  int repetitions = 10;
  int demos = 20;
  std::uint64_t base_seed = 1;
  double cond_threshold = 1e8;
  RiccatiSolverConfig solver{};
  int threads = 1;
};

struct StudyRow {
  int K = 0;
  int rep = 0;  // 1-based repetition index
  std::uint64_t gt_seed = 0;
  std::uint64_t est_seed = 0;
  ErrorReport err;
  bool ok = false;
  std::string failure;
};

struct StudyAverages {
  int K = 0;
  double e_mu_x = 0.0, e_mu_u = 0.0, e_var_x = 0.0, e_var_u = 0.0, t_C = 0.0;
  int repetitions = 0;  // rows that entered the averages
  int failures = 0;
};

struct StudyResult {
  std::vector<StudyRow> rows;           // ordered by (K, rep)
  std::vector<StudyAverages> averages;  // one per K
};

/// Per-node GT and estimated mean and +-2 sigma state envelopes, for
/// external plotting.
struct EnvelopeSeries {
  std::vector<double> grid;
  Matrix gt_mean, gt_lo, gt_hi;    // n x nodes
  Matrix est_mean, est_lo, est_hi;
};

inline EnvelopeSeries state_envelopes(const MomentSeries& gt,
                                      const MomentSeries& est) {
  EnvelopeSeries env;
  env.grid = gt.grid;
  const Matrix gt_band = 2.0 * gt.x_var.cwiseSqrt();
  const Matrix est_band = 2.0 * est.x_var.cwiseSqrt();
  env.gt_mean = gt.x_mean;
  env.gt_lo = gt.x_mean - gt_band;
  env.gt_hi = gt.x_mean + gt_band;
  env.est_mean = est.x_mean;
  env.est_lo = est.x_mean - est_band;
  env.est_hi = est.x_mean + est_band;
  return env;
}

/// One (K, repetition) cell of the batch study: generate a GT bundle, run
/// the inverse pipeline on the K-step sub-grid, re-solve and re-simulate
/// under the estimates with fresh seeds, and score the moment deviations.
/// t_C covers the identification only, not GT generation or scoring.
inline StudyRow run_study_cell(const GameDefinition& game,
                               const CostParameters& costs,
                               const NoiseModel& noise, int K, int rep,
                               const StudyConfig& cfg,
                               EnvelopeSeries* envelopes = nullptr) {
  StudyRow row;
  row.K = K;
  row.rep = rep;
  row.gt_seed = detail::derive_stream(cfg.base_seed, (static_cast<std::uint64_t>(K) << 20) + 2 * rep);
  row.est_seed = detail::derive_stream(cfg.base_seed, (static_cast<std::uint64_t>(K) << 20) + 2 * rep + 1);

  try {
    if (K < 1 || game.steps % K != 0)
      throw std::invalid_argument("K must divide the grid interval count");

    const StrategyProfile gt_profile = solve_coupled_riccati(game, costs, cfg.solver);
    SimulationConfig sim;
    sim.demos = cfg.demos;
    sim.seed = row.gt_seed;
    const TrajectoryBundle gt_bundle = simulate_bundle(game, gt_profile, noise, sim);

    // Identification sees only the K evaluated time steps.
    const TrajectoryBundle sub = subsample(gt_bundle, game.steps / K);
    const GameDefinition coarse = game.with_steps(K);
    const InverseSolution inv = run_inverse_pipeline(coarse, sub, cfg.cond_threshold);

    const StrategyProfile est_profile =
        solve_coupled_riccati(game, inv.costs, cfg.solver);
    NoiseModel est_noise = inv.noise.noise;
    est_noise.dt = game.dt();
    SimulationConfig resim = sim;
    resim.seed = row.est_seed;
    const TrajectoryBundle est_bundle =
        simulate_bundle(game, est_profile, est_noise, resim);

    const MomentSeries gt_mom = empirical_moments(gt_bundle);
    const MomentSeries est_mom = empirical_moments(est_bundle);
    row.err = trajectory_errors(gt_mom, est_mom);
    row.err.t_C = inv.t_C;
    row.err.K_eval = K;
    row.err.D = cfg.demos;
    row.err.repetition = rep;
    row.err.seed = row.gt_seed;
    row.ok = true;
    if (envelopes) *envelopes = state_envelopes(gt_mom, est_mom);
  } catch (const std::exception& e) {
    row.ok = false;
    row.failure = e.what();
  }
  return row;
}

inline std::vector<StudyAverages> average_study_rows(
    const std::vector<StudyRow>& rows, const std::vector<int>& K_values) {
  std::vector<StudyAverages> avgs;
  for (int K : K_values) {
    StudyAverages a;
    a.K = K;
    for (const auto& r : rows) {
      if (r.K != K) continue;
      if (!r.ok) {
        ++a.failures;
        continue;
      }
      a.e_mu_x += r.err.e_mu_x;
      a.e_mu_u += r.err.e_mu_u;
      a.e_var_x += r.err.e_var_x;
      a.e_var_u += r.err.e_var_u;
      a.t_C += r.err.t_C;
      ++a.repetitions;
    }
    if (a.repetitions > 0) {
      a.e_mu_x /= a.repetitions;
      a.e_mu_u /= a.repetitions;
      a.e_var_x /= a.repetitions;
      a.e_var_u /= a.repetitions;
      a.t_C /= a.repetitions;
    }
    avgs.push_back(a);
  }
  return avgs;
}

/// Repeats the forward-simulation + identification round trip
/// `repetitions` times per K and averages the four maximum errors. Cells
/// are independently seeded by (K, rep), so the table is deterministic for
/// a given config regardless of scheduling; failed cells are recorded and
/// excluded from the averages.
inline StudyResult run_batch_study(const GameDefinition& game,
                                   const CostParameters& costs,
                                   const NoiseModel& noise,
                                   const StudyConfig& cfg) {
  std::vector<std::pair<int, int>> cells;
  for (int K : cfg.K_values)
    for (int rep = 1; rep <= cfg.repetitions; ++rep) cells.emplace_back(K, rep);

  StudyResult result;
  result.rows.resize(cells.size());

  const int workers = std::max(1, cfg.threads);
  auto work = [&](int worker) {
    for (size_t idx = worker; idx < cells.size(); idx += workers)
      result.rows[idx] = run_study_cell(game, costs, noise, cells[idx].first,
                                        cells[idx].second, cfg);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  result.averages = average_study_rows(result.rows, cfg.K_values);
  return result;
}

}  // namespace lqgame
