#pragma once

#include <chrono>
#include <vector>

#include "lqgame/cost_inference.hpp"
#include "lqgame/game.hpp"
#include "lqgame/noise_estimation.hpp"
#include "lqgame/riccati.hpp"
#include "lqgame/strategy_estimation.hpp"

namespace lqgame {

/// Everything the inverse pipeline recovers from one demonstration bundle,
/// with the per-stage diagnostics and the identification wall time.
struct InverseSolution {
  StrategyProfile gains;                    // estimated on the bundle grid
  ExcitationReport excitation;
  CostParameters costs;                     // recovered and normalized
  std::vector<Vector> thetas;               // per player
  std::vector<NullSpaceSolution> null_space;
  std::vector<std::vector<std::string>> cost_violations;
  NoiseFit noise;
  double t_C = 0.0;  // seconds spent estimating (gains + costs + noise)
};

/// Runs the identification end to end on a bundle: least-squares gain
/// recovery per node, stacked null-space solve per player over every node
/// except tN, then the closed-form noise MLE on the residuals. `game` only
/// contributes the system matrices and the horizon; its cost and noise
/// fields are never consulted, matching the inverse problem's information
/// boundary. The game's grid must match the bundle's.
inline InverseSolution run_inverse_pipeline(const GameDefinition& game,
                                            const TrajectoryBundle& bundle,
                                            double cond_threshold = 1e8) {
  check_bundle(bundle);
  if (bundle.num_nodes() != game.steps + 1)
    throw std::invalid_argument("bundle grid does not match the game grid");

  const auto start = std::chrono::steady_clock::now();

  InverseSolution sol;
  GainEstimate est = estimate_gains(bundle, cond_threshold);
  attach_closed_loop(est.profile, game);
  sol.gains = std::move(est.profile);
  sol.excitation = std::move(est.excitation);

  const std::vector<int> nodes = select_nodes(game.steps, game.steps);
  sol.costs.players.resize(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    const CostInferenceSystem sys = stack_system(game, sol.gains, i, nodes);
    NullSpaceSolution ns = solve_null_space(sys, game);
    RecoveredCost rec = recover_costs(ns.theta, game, i);
    sol.thetas.push_back(ns.theta);
    sol.null_space.push_back(std::move(ns));
    sol.costs.players[i] = std::move(rec.cost);
    sol.cost_violations.push_back(std::move(rec.violations));
  }

  const ResidualSet res = residuals(bundle, game);
  sol.noise = recover_L(mle_covariance(res), res.dt);

  sol.t_C = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
  return sol;
}

}  // namespace lqgame
