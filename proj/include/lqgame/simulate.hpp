#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lqgame/game.hpp"

namespace lqgame {

struct SimulationConfig {
  int demos = 1;               // D
  std::uint64_t seed = 0;
  bool deterministic = false;  // drop the noise term entirely (testing only)
  bool record_noise = false;   // keep the L*dw draws per demonstration
  std::vector<Vector> x0_override;  // empty, or one initial state per demo
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Splittable stream derivation: every (seed, index) pair maps to an
/// independent, reproducible generator seed.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
  return splitmix64(s);
}

}  // namespace detail

/// Euler-Maruyama simulation of the closed-loop system under a strategy
/// profile:
///   u_{i,k} = -K_i(t_k) x_k
///   x_{k+1} = x_k + (A x_k + sum_i B_i u_{i,k}) dt + L dw_k,
/// dw_k ~ N(0, I dt). Controls are recorded at every node including tN.
/// Demonstrations draw from independent streams derived from cfg.seed, so
/// the bundle is reproducible and order-independent.
inline TrajectoryBundle simulate_bundle(const GameDefinition& game,
                                        const StrategyProfile& profile,
                                        const NoiseModel& noise,
                                        const SimulationConfig& cfg) {
  const int n = game.state_dim();
  const int N = game.num_players();
  const int nodes = game.steps + 1;

  if (cfg.demos < 1) throw std::invalid_argument("demo count must be >= 1");
  if (profile.num_nodes() != nodes || profile.num_players() != N)
    throw std::invalid_argument("profile is not on the game's grid");
  if (!cfg.deterministic) {
    if (noise.l.size() != n) throw std::invalid_argument("noise dimension mismatch");
    if (std::abs(noise.dt - game.dt()) > 1e-12 * std::max(1.0, game.dt()))
      throw std::invalid_argument("noise dt must equal the grid step");
  }
  if (!cfg.x0_override.empty() &&
      static_cast<int>(cfg.x0_override.size()) != cfg.demos)
    throw std::invalid_argument("x0 override must supply one state per demo");

  const double dt = game.dt();
  const double sqrt_dt = std::sqrt(dt);

  TrajectoryBundle bundle;
  bundle.grid = game.grid();
  bundle.seed = cfg.seed;
  bundle.demos.resize(cfg.demos);

  for (int d = 0; d < cfg.demos; ++d) {
    Trajectory& traj = bundle.demos[d];
    traj.x.resize(n, nodes);
    for (int i = 0; i < N; ++i)
      traj.u.emplace_back(game.control_dim(i), nodes);
    if (cfg.record_noise && !cfg.deterministic)
      traj.noise = Matrix::Zero(n, nodes - 1);

    std::mt19937_64 rng(detail::derive_stream(cfg.seed, d));
    std::normal_distribution<double> gauss(0.0, 1.0);

    Vector x = cfg.x0_override.empty() ? game.x0 : cfg.x0_override[d];
    for (int k = 0; k < nodes; ++k) {
      traj.x.col(k) = x;
      Vector drift = game.A * x;
      for (int i = 0; i < N; ++i) {
        const Vector ui = -profile.K[i][k] * x;
        traj.u[i].col(k) = ui;
        drift.noalias() += game.B[i] * ui;
      }
      if (k == nodes - 1) break;

      Vector next = x + drift * dt;
      if (!cfg.deterministic) {
        Vector dw(n);
        for (int s = 0; s < n; ++s) dw[s] = gauss(rng) * sqrt_dt;
        const Vector ldw = noise.l.cwiseProduct(dw);
        next += ldw;
        if (cfg.record_noise) traj.noise.col(k) = ldw;
      }
      if (!next.allFinite())
        throw NumericalError("demonstration " + std::to_string(d) +
                             " diverged at t = " +
                             std::to_string(game.time_at(k + 1)));
      x = next;
    }
  }
  return bundle;
}

/// Component-wise sample mean and unbiased sample variance across
/// demonstrations, per grid node, for the states and every player's controls.
struct MomentSeries {
  std::vector<double> grid;
  Matrix x_mean;                // n x nodes
  Matrix x_var;                 // n x nodes
  std::vector<Matrix> u_mean;   // per player, m_i x nodes
  std::vector<Matrix> u_var;
};

inline MomentSeries empirical_moments(const TrajectoryBundle& bundle) {
  check_bundle(bundle);
  const int D = bundle.demo_count();
  if (D < 2)
    throw std::invalid_argument("variance needs at least two demonstrations");

  const int nodes = bundle.num_nodes();
  const int n = bundle.state_dim();
  const int N = bundle.num_players();

  MomentSeries mom;
  mom.grid = bundle.grid;
  mom.x_mean = Matrix::Zero(n, nodes);
  mom.x_var = Matrix::Zero(n, nodes);
  for (const auto& d : bundle.demos) mom.x_mean += d.x;
  mom.x_mean /= D;
  for (const auto& d : bundle.demos)
    mom.x_var += (d.x - mom.x_mean).cwiseAbs2();
  mom.x_var /= (D - 1);

  for (int i = 0; i < N; ++i) {
    const int mi = static_cast<int>(bundle.demos[0].u[i].rows());
    Matrix mean = Matrix::Zero(mi, nodes);
    for (const auto& d : bundle.demos) mean += d.u[i];
    mean /= D;
    Matrix var = Matrix::Zero(mi, nodes);
    for (const auto& d : bundle.demos) var += (d.u[i] - mean).cwiseAbs2();
    var /= (D - 1);
    mom.u_mean.push_back(std::move(mean));
    mom.u_var.push_back(std::move(var));
  }
  return mom;
}

}  // namespace lqgame
