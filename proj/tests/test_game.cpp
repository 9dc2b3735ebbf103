#include <catch2/catch_amalgamated.hpp>

#include <lqgame/game.hpp>

#include <algorithm>
#include <random>

#include "support/fixtures.hpp"

using namespace lqgame;

namespace {

Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = g(rng);
  return 0.5 * (m + m.transpose()).eval();
}

Matrix random_spd(int n, std::mt19937_64& rng) {
  const Matrix m = random_symmetric(n, rng);
  return m * m.transpose() + 0.1 * Matrix::Identity(n, n);
}

Matrix random_psd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n - 1 > 0 ? n - 1 : 1);  // rank-deficient factor
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) = g(rng);
  return m * m.transpose();
}

bool mentions(const ValidationReport& rep, const std::string& needle) {
  return std::any_of(rep.violations.begin(), rep.violations.end(),
                     [&](const std::string& v) {
                       return v.find(needle) != std::string::npos;
                     });
}

}  // namespace

TEST_CASE("validate accepts the benchmark game", "[game]") {
  const auto rep = validate(testing::two_player_game(), testing::two_player_costs(),
                            testing::two_player_noise());
  CAPTURE(rep.violations);
  CHECK(rep.ok());
}

TEST_CASE("validate reports indefinite Q", "[game]") {
  auto costs = testing::two_player_costs();
  Vector d(2);
  d << 1.0, -1.0;
  costs.players[0].Q = d.asDiagonal();
  const auto rep = validate(testing::two_player_game(), costs,
                            testing::two_player_noise());
  CHECK_FALSE(rep.ok());
  CHECK(mentions(rep, "Q_1 not positive definite"));
}

TEST_CASE("validate reports non-positive noise scaling", "[game]") {
  auto noise = testing::two_player_noise();
  noise.l[1] = 0.0;
  const auto rep = validate(testing::two_player_game(), testing::two_player_costs(),
                            noise);
  CHECK_FALSE(rep.ok());
  CHECK(mentions(rep, "l_2 not strictly positive"));
}

TEST_CASE("validate reports dimension mismatches", "[game]") {
  auto game = testing::two_player_game();
  auto costs = testing::two_player_costs();
  costs.players[1].R[0] = Matrix::Identity(3, 3);
  const auto rep = validate(game, costs, testing::two_player_noise());
  CHECK(mentions(rep, "R_21 dimension mismatch"));

  game.tN = game.t0;
  const auto rep2 = validate(game, testing::two_player_costs(),
                             testing::two_player_noise());
  CHECK(mentions(rep2, "tN must exceed t0"));
}

TEST_CASE("validate accepts random definite constructions", "[game]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int N = 1 + static_cast<int>(rng() % 3);
    GameDefinition game;
    game.A = random_symmetric(n, rng);
    game.x0 = Vector::Zero(n);
    game.t0 = 0.0;
    game.tN = 1.0;
    game.steps = 10;
    CostParameters costs;
    NoiseModel noise;
    noise.dt = game.dt();
    noise.l = Vector::Constant(n, 0.5);
    for (int i = 0; i < N; ++i) {
      const int mi = 1 + static_cast<int>(rng() % 3);
      game.B.push_back(Matrix::Ones(n, mi));
    }
    for (int i = 0; i < N; ++i) {
      PlayerCost pc;
      pc.Q = random_spd(n, rng);
      for (int j = 0; j < N; ++j) {
        const int mj = game.control_dim(j);
        pc.R.push_back(i == j ? random_spd(mj, rng) : random_psd(mj, rng));
      }
      costs.players.push_back(std::move(pc));
    }
    const auto rep = validate(game, costs, noise);
    CAPTURE(trial, rep.violations);
    REQUIRE(rep.ok());

    // Any definiteness break must be caught.
    auto broken = costs;
    broken.players[0].Q -=
        (detail::sym_norm(broken.players[0].Q) * 2.0) * Matrix::Identity(n, n);
    CHECK(mentions(validate(game, broken, noise),
                   "Q_1 not positive definite"));
  }
}

TEST_CASE("vectorize is column-major", "[game]") {
  GameDefinition game;
  game.A = Matrix::Zero(2, 2);
  game.B = {Matrix::Ones(2, 1)};
  game.x0 = Vector::Zero(2);

  CostParameters costs;
  PlayerCost pc;
  pc.Q.resize(2, 2);
  pc.Q << 1.0, 2.0, 2.0, 3.0;
  pc.R = {Matrix::Constant(1, 1, 5.0)};
  costs.players = {pc};

  const Vector theta = vectorize_costs(costs, 0);
  Vector expected(5);
  expected << 1.0, 2.0, 2.0, 3.0, 5.0;
  CHECK(theta == expected);
}

TEST_CASE("benchmark player 1 vectorizes to the expected 12-vector", "[game]") {
  const auto game = testing::two_player_game();
  const auto costs = testing::two_player_costs();
  REQUIRE(game.param_dim() == 12);

  const Vector theta = vectorize_costs(costs, 0);
  Vector expected(12);
  expected << 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0;
  CHECK(theta == expected);

  const Vector theta2 = vectorize_costs(costs, 1);
  Vector expected2(12);
  expected2 << 1, 0, 0, 10, 0, 0, 0, 0, 1, 0, 0, 2;
  CHECK(theta2 == expected2);
}

TEST_CASE("vectorize and devectorize round-trip exactly", "[game]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int N = 1 + static_cast<int>(rng() % 3);
    GameDefinition game;
    game.A = Matrix::Zero(n, n);
    game.x0 = Vector::Zero(n);
    for (int j = 0; j < N; ++j)
      game.B.push_back(Matrix::Zero(n, 1 + static_cast<int>(rng() % 3)));

    CostParameters costs;
    for (int i = 0; i < N; ++i) {
      PlayerCost pc;
      pc.Q = random_symmetric(n, rng);
      for (int j = 0; j < N; ++j)
        pc.R.push_back(random_symmetric(game.control_dim(j), rng));
      costs.players.push_back(std::move(pc));
    }

    for (int i = 0; i < N; ++i) {
      const Vector theta = vectorize_costs(costs, i);
      REQUIRE(theta.size() == game.param_dim());
      const PlayerCost back = devectorize_costs(theta, game);
      CHECK(back.Q == costs.players[i].Q);
      for (int j = 0; j < N; ++j) CHECK(back.R[j] == costs.players[i].R[j]);
      CHECK(vectorize_costs(CostParameters{{back}}, 0) == theta);
    }
  }
}

TEST_CASE("devectorize symmetrizes asymmetric input", "[game]") {
  GameDefinition game;
  game.A = Matrix::Zero(2, 2);
  game.B = {Matrix::Zero(2, 1)};
  game.x0 = Vector::Zero(2);

  Vector theta(5);
  theta << 1.0, 0.4, 0.6, 3.0, 2.0;  // Q off-diagonals disagree
  const PlayerCost pc = devectorize_costs(theta, game);
  CHECK(pc.Q(0, 1) == Catch::Approx(0.5));
  CHECK(pc.Q(1, 0) == Catch::Approx(0.5));
  CHECK(pc.Q(0, 0) == 1.0);
}

TEST_CASE("devectorize rejects wrong length", "[game]") {
  GameDefinition game;
  game.A = Matrix::Zero(2, 2);
  game.B = {Matrix::Zero(2, 2)};
  game.x0 = Vector::Zero(2);
  CHECK_THROWS_AS(devectorize_costs(Vector::Zero(7), game),
                  std::invalid_argument);
}

TEST_CASE("subsample keeps every factor-th node", "[game]") {
  TrajectoryBundle bundle;
  bundle.grid = {0.0, 0.1, 0.2, 0.3, 0.4};
  Trajectory t;
  t.x.resize(1, 5);
  t.x << 0, 1, 2, 3, 4;
  t.u.push_back(t.x);
  bundle.demos = {t};

  const auto half = subsample(bundle, 2);
  REQUIRE(half.grid == std::vector<double>{0.0, 0.2, 0.4});
  Matrix expected(1, 3);
  expected << 0, 2, 4;
  CHECK(half.demos[0].x == expected);
  CHECK(half.demos[0].u[0] == expected);

  CHECK_THROWS_AS(subsample(bundle, 3), std::invalid_argument);
}
