#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lqgame/errors.hpp"

namespace lqgame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Linear stochastic system dx = (A x + sum_i B_i u_i) dt + L dw together
/// with the horizon [t0, tN], a uniform grid of `steps` intervals and the
/// initial state. Immutable after construction; all solvers and estimators
/// operate on the grid nodes only.
struct GameDefinition {
  Matrix A;                // n x n
  std::vector<Matrix> B;   // per player, n x m_i
  Vector x0;               // n
  double t0 = 0.0;
  double tN = 1.0;
  int steps = 1;           // number of uniform grid intervals

  int state_dim() const { return static_cast<int>(A.rows()); }
  int num_players() const { return static_cast<int>(B.size()); }
  int control_dim(int player) const { return static_cast<int>(B[player].cols()); }

  /// p = n^2 + sum_j m_j^2, the length of a vectorized cost parameter.
  int param_dim() const {
    int p = state_dim() * state_dim();
    for (int j = 0; j < num_players(); ++j) p += control_dim(j) * control_dim(j);
    return p;
  }

  double dt() const { return (tN - t0) / steps; }
  double time_at(int k) const { return t0 + k * dt(); }

  std::vector<double> grid() const {
    std::vector<double> g(steps + 1);
    for (int k = 0; k <= steps; ++k) g[k] = time_at(k);
    return g;
  }

  /// Same system on a grid with `k` intervals (used when the inverse
  /// pipeline evaluates on a coarser sub-grid).
  GameDefinition with_steps(int k) const {
    GameDefinition g = *this;
    g.steps = k;
    return g;
  }
};

/// One player's quadratic weights: Q on the state, R[j] on player j's input.
struct PlayerCost {
  Matrix Q;                // n x n, symmetric
  std::vector<Matrix> R;   // R[j]: m_j x m_j, symmetric
};

struct CostParameters {
  std::vector<PlayerCost> players;
};

/// Diagonal noise scaling: increments L dw have covariance L L^T dt.
struct NoiseModel {
  Vector l;        // diagonal entries of L
  double dt = 0.0; // discretization step the model refers to

  Matrix L() const { return Matrix(l.asDiagonal()); }
  Matrix covariance() const { return Matrix(l.cwiseProduct(l).asDiagonal()); }
};

/// Time-indexed feedback gains K_i(t_k) on a grid, optionally with the
/// Riccati solutions P_i(t_k) and the closed-loop matrices F(t_k).
struct StrategyProfile {
  std::vector<double> grid;
  std::vector<std::vector<Matrix>> K;  // [player][node], m_i x n
  std::vector<std::vector<Matrix>> P;  // [player][node], n x n; may be empty
  std::vector<Matrix> F;               // [node], n x n; may be empty

  int num_nodes() const { return static_cast<int>(grid.size()); }
  int num_players() const { return static_cast<int>(K.size()); }
  bool has_P() const { return !P.empty(); }
  bool has_F() const { return !F.empty(); }

  /// All players' gains at one node.
  std::vector<Matrix> gains_at(int node) const {
    std::vector<Matrix> g;
    g.reserve(K.size());
    for (const auto& ki : K) g.push_back(ki[node]);
    return g;
  }
};

/// One demonstration: states and per-player controls as columns over the grid.
struct Trajectory {
  Matrix x;                // n x (nodes)
  std::vector<Matrix> u;   // per player, m_i x (nodes)
  Matrix noise;            // n x (nodes-1): recorded L*dw draws; may be empty
};

struct TrajectoryBundle {
  std::vector<double> grid;
  std::vector<Trajectory> demos;
  std::uint64_t seed = 0;

  int demo_count() const { return static_cast<int>(demos.size()); }
  int num_nodes() const { return static_cast<int>(grid.size()); }
  int state_dim() const { return demos.empty() ? 0 : static_cast<int>(demos[0].x.rows()); }
  int num_players() const { return demos.empty() ? 0 : static_cast<int>(demos[0].u.size()); }
  double dt() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {

// Spectral norm of a symmetric (or nearly symmetric) matrix.
inline double sym_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Eigenvalue thresholds scaled by the spectral norm; absorbs symmetrization
// noise without masking real violations.
inline bool is_positive_definite(const Matrix& m) {
  const double lo = min_eigenvalue(m);
  return lo > 0.0 && lo >= 1e-9 * sym_norm(m);
}

inline bool is_positive_semidefinite(const Matrix& m) {
  return min_eigenvalue(m) >= -1e-9 * sym_norm(m);
}

}  // namespace detail

/// Checks every structural invariant of a game instance. Violations are
/// collected, not thrown; an empty report means the instance is valid.
inline ValidationReport validate(const GameDefinition& game,
                                 const CostParameters& costs,
                                 const NoiseModel& noise) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& what) { rep.violations.push_back(what); };

  const int n = game.state_dim();
  const int N = game.num_players();
  if (n < 1) fail("state dimension must be at least 1");
  if (N < 1) fail("player count must be at least 1");
  if (game.A.rows() != game.A.cols()) fail("A not square");
  if (game.x0.size() != n) fail("x0 dimension mismatch");
  if (!(game.tN > game.t0)) fail("tN must exceed t0");
  if (game.steps < 1) fail("grid must have at least 1 interval");

  for (int i = 0; i < N; ++i) {
    const std::string bi = "B_" + std::to_string(i + 1);
    if (game.B[i].rows() != n) fail(bi + " row dimension mismatch");
    if (game.B[i].cols() < 1) fail(bi + " must have at least one column");
  }

  if (static_cast<int>(costs.players.size()) != N) {
    fail("cost parameters must cover every player");
    return rep;
  }
  for (int i = 0; i < N; ++i) {
    const auto& pc = costs.players[i];
    const std::string qi = "Q_" + std::to_string(i + 1);
    if (pc.Q.rows() != n || pc.Q.cols() != n) {
      fail(qi + " dimension mismatch");
    } else if (!detail::is_symmetric(pc.Q)) {
      fail(qi + " not symmetric");
    } else if (!detail::is_positive_definite(pc.Q)) {
      fail(qi + " not positive definite");
    }
    if (static_cast<int>(pc.R.size()) != N) {
      fail("R row " + std::to_string(i + 1) + " must cover every player");
      continue;
    }
    for (int j = 0; j < N; ++j) {
      const int mj = game.control_dim(j);
      const std::string rij =
          "R_" + std::to_string(i + 1) + std::to_string(j + 1);
      if (pc.R[j].rows() != mj || pc.R[j].cols() != mj) {
        fail(rij + " dimension mismatch");
        continue;
      }
      if (!detail::is_symmetric(pc.R[j])) {
        fail(rij + " not symmetric");
        continue;
      }
      if (i == j) {
        if (!detail::is_positive_definite(pc.R[j]))
          fail(rij + " not positive definite");
      } else if (!detail::is_positive_semidefinite(pc.R[j])) {
        fail(rij + " not positive semidefinite");
      }
    }
  }

  if (noise.l.size() != n) fail("L diagonal dimension mismatch");
  for (int s = 0; s < noise.l.size(); ++s) {
    if (!(noise.l[s] > 0.0))
      fail("l_" + std::to_string(s + 1) + " not strictly positive");
  }
  if (!(noise.dt > 0.0)) fail("noise dt must be positive");

  return rep;
}

/// theta_i = [vec(Q_i); vec(R_i1); ...; vec(R_iN)], column-major vec.
inline Vector vectorize_costs(const CostParameters& costs, int player) {
  const auto& pc = costs.players.at(player);
  const int n = static_cast<int>(pc.Q.rows());
  int p = n * n;
  for (const auto& r : pc.R) p += static_cast<int>(r.size());

  Vector theta(p);
  theta.head(n * n) = Eigen::Map<const Vector>(pc.Q.data(), n * n);
  int off = n * n;
  for (const auto& r : pc.R) {
    const int sz = static_cast<int>(r.size());
    theta.segment(off, sz) = Eigen::Map<const Vector>(r.data(), sz);
    off += sz;
  }
  return theta;
}

/// Inverse of vectorize_costs for one player; each block is symmetrized via
/// (X + X^T)/2.
inline PlayerCost devectorize_costs(const Vector& theta,
                                    const GameDefinition& game) {
  const int n = game.state_dim();
  if (theta.size() != game.param_dim())
    throw std::invalid_argument("theta length does not match game dimensions");

  PlayerCost pc;
  Matrix q = Eigen::Map<const Matrix>(theta.data(), n, n);
  pc.Q = 0.5 * (q + q.transpose());
  int off = n * n;
  for (int j = 0; j < game.num_players(); ++j) {
    const int mj = game.control_dim(j);
    Matrix r = Eigen::Map<const Matrix>(theta.data() + off, mj, mj);
    pc.R.push_back(0.5 * (r + r.transpose()));
    off += mj * mj;
  }
  return pc;
}

/// Every demonstration must share the grid and dimensions.
inline void check_bundle(const TrajectoryBundle& bundle) {
  if (bundle.demos.empty()) throw std::invalid_argument("bundle has no demonstrations");
  const int nodes = bundle.num_nodes();
  const int n = bundle.state_dim();
  const int N = bundle.num_players();
  for (const auto& d : bundle.demos) {
    if (d.x.rows() != n || d.x.cols() != nodes)
      throw std::invalid_argument("demonstration state dimensions inconsistent");
    if (static_cast<int>(d.u.size()) != N)
      throw std::invalid_argument("demonstration player count inconsistent");
    for (const auto& u : d.u)
      if (u.cols() != nodes)
        throw std::invalid_argument("demonstration control dimensions inconsistent");
  }
}

/// Keeps every `factor`-th node (node 0, factor, 2*factor, ...). The bundle
/// must cover a grid whose interval count is divisible by `factor`. Recorded
/// noise draws are dropped; they refer to the fine discretization.
inline TrajectoryBundle subsample(const TrajectoryBundle& bundle, int factor) {
  check_bundle(bundle);
  const int intervals = bundle.num_nodes() - 1;
  if (factor < 1 || intervals % factor != 0)
    throw std::invalid_argument("subsample factor must divide the grid interval count");

  TrajectoryBundle out;
  out.seed = bundle.seed;
  const int coarse_nodes = intervals / factor + 1;
  out.grid.resize(coarse_nodes);
  for (int k = 0; k < coarse_nodes; ++k) out.grid[k] = bundle.grid[k * factor];

  for (const auto& d : bundle.demos) {
    Trajectory t;
    t.x.resize(d.x.rows(), coarse_nodes);
    for (int k = 0; k < coarse_nodes; ++k) t.x.col(k) = d.x.col(k * factor);
    for (const auto& u : d.u) {
      Matrix uc(u.rows(), coarse_nodes);
      for (int k = 0; k < coarse_nodes; ++k) uc.col(k) = u.col(k * factor);
      t.u.push_back(std::move(uc));
    }
    out.demos.push_back(std::move(t));
  }
  return out;
}

}  // namespace lqgame
