#include <catch2/catch_amalgamated.hpp>

#include <lqgame/pipeline.hpp>
#include <lqgame/study.hpp>

#include "support/fixtures.hpp"

using namespace lqgame;

TEST_CASE("inverse pipeline round-trips the benchmark game", "[study]") {
  const auto game = testing::two_player_game();
  const auto costs = testing::two_player_costs();
  const auto profile = solve_coupled_riccati(game, costs);
  SimulationConfig cfg;
  cfg.demos = 20;
  cfg.seed = 8080;
  const auto bundle =
      simulate_bundle(game, profile, testing::two_player_noise(), cfg);

  const auto sol = run_inverse_pipeline(game, bundle);
  CHECK(sol.t_C > 0.0);
  CHECK(sol.excitation.flagged[0]);

  // Gains: exact recovery away from t0.
  double worst_gain = 0.0;
  for (int k = 1; k <= game.steps; ++k)
    for (int i = 0; i < 2; ++i)
      worst_gain = std::max(worst_gain,
                            testing::max_relative_error(sol.gains.K[i][k],
                                                        profile.K[i][k]));
  CHECK(worst_gain <= 1e-8);

  // Costs: normalized recovery close to the generating parameters.
  for (int i = 0; i < 2; ++i) {
    Vector truth = vectorize_costs(costs, i);
    truth /= truth(0);
    CHECK((sol.thetas[i] - truth).cwiseAbs().maxCoeff() <= 1e-2);
    CHECK(sol.null_space[i].rank_consistent);
  }

  // Noise scaling close to diag(0.1, 0.2).
  CHECK(std::abs(sol.noise.noise.l[0] - 0.1) <= 0.01);
  CHECK(std::abs(sol.noise.noise.l[1] - 0.2) <= 0.02);
}

TEST_CASE("pipeline rejects mismatched grids", "[study]") {
  const auto game = testing::two_player_game(100);
  const auto profile = solve_coupled_riccati(game, testing::two_player_costs());
  SimulationConfig cfg;
  cfg.demos = 3;
  cfg.seed = 1;
  const auto bundle =
      simulate_bundle(game, profile, testing::two_player_noise(100), cfg);
  CHECK_THROWS_AS(run_inverse_pipeline(game.with_steps(50), bundle),
                  std::invalid_argument);
}

TEST_CASE("study cells are deterministic given seeds", "[study]") {
  const auto game = testing::two_player_game(100);
  StudyConfig cfg;
  cfg.demos = 8;
  cfg.base_seed = 7;
  cfg.K_values = {20};
  cfg.repetitions = 1;

  const auto a = run_study_cell(game, testing::two_player_costs(),
                                testing::two_player_noise(100), 20, 1, cfg);
  const auto b = run_study_cell(game, testing::two_player_costs(),
                                testing::two_player_noise(100), 20, 1, cfg);
  REQUIRE(a.ok);
  REQUIRE(b.ok);
  CHECK(a.err.e_mu_x == b.err.e_mu_x);
  CHECK(a.err.e_var_u == b.err.e_var_u);
  CHECK(a.gt_seed == b.gt_seed);
  CHECK(a.gt_seed != a.est_seed);
}

TEST_CASE("non-divisor K fails the cell without aborting the study", "[study]") {
  const auto game = testing::two_player_game(100);
  StudyConfig cfg;
  cfg.demos = 4;
  cfg.K_values = {33};
  cfg.repetitions = 1;
  const auto result = run_batch_study(game, testing::two_player_costs(),
                                      testing::two_player_noise(100), cfg);
  REQUIRE(result.rows.size() == 1);
  CHECK_FALSE(result.rows[0].ok);
  CHECK(result.averages[0].failures == 1);
  CHECK(result.averages[0].repetitions == 0);
}

TEST_CASE("small batch study produces complete averaged rows", "[study]") {
  const auto game = testing::two_player_game(100);
  StudyConfig cfg;
  cfg.demos = 10;
  cfg.base_seed = 99;
  cfg.K_values = {20, 100};
  cfg.repetitions = 2;
  cfg.threads = 2;

  const auto result = run_batch_study(game, testing::two_player_costs(),
                                      testing::two_player_noise(100), cfg);
  REQUIRE(result.rows.size() == 4);
  for (const auto& row : result.rows) {
    CAPTURE(row.K, row.rep, row.failure);
    REQUIRE(row.ok);
    CHECK(row.err.e_mu_x >= 0.0);
    CHECK(row.err.t_C > 0.0);
  }
  REQUIRE(result.averages.size() == 2);
  // Richer evaluation grids do not hurt the mean-trajectory metrics.
  CHECK(result.averages[1].e_mu_x <= result.averages[0].e_mu_x);
}

TEST_CASE("control run with exact parameters hits the resampling floor",
          "[study]") {
  // Skipping inference entirely isolates the Monte-Carlo floor: simulate
  // twice under the true parameters with the study's GT/EST seed pair.
  const auto game = testing::two_player_game();
  const auto costs = testing::two_player_costs();
  const auto noise = testing::two_player_noise();
  const auto profile = solve_coupled_riccati(game, costs);

  StudyConfig cfg;
  cfg.demos = 20;
  cfg.base_seed = 31;
  const auto cell = run_study_cell(game, costs, noise, 500, 1, cfg);
  REQUIRE(cell.ok);

  SimulationConfig gt_sim, est_sim;
  gt_sim.demos = est_sim.demos = 20;
  gt_sim.seed = cell.gt_seed;
  est_sim.seed = cell.est_seed;
  const auto floor_rep = trajectory_errors(
      empirical_moments(simulate_bundle(game, profile, noise, gt_sim)),
      empirical_moments(simulate_bundle(game, profile, noise, est_sim)));

  // The full pipeline at K = 500 sits within a small factor of the pure
  // resampling floor; identification error is subdominant.
  CHECK(cell.err.e_var_x <= 3.0 * floor_rep.e_var_x + 1e-3);
  CHECK(cell.err.e_var_u <= 3.0 * floor_rep.e_var_u + 1e-3);
  CHECK(cell.err.e_mu_x <= 3.0 * floor_rep.e_mu_x + 1e-4);
}
