#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lqgame/game.hpp"

namespace lqgame {

/// Stacked homogeneous system for one player: every valid cost vector
/// theta_i = [vec(Q_i); vec(R_i1); ...; vec(R_iN)] satisfies M theta_i = 0.
struct CostInferenceSystem {
  int player = 0;
  int p = 0;                  // n^2 + sum_j m_j^2
  Matrix M;                   // (|nodes| * m_i^2) x p
  std::vector<int> nodes;     // grid indices the row blocks were evaluated at
  Vector singular_values;     // descending, padded with zeros to length p
  int rank = 0;               // numerical rank of M
};

/// Builds the per-node row blocks
///   M_i(t_k) = [ M_Q(t_k) | M_R1(t_k) | ... | M_RN(t_k) ]
/// from a strategy profile. The time integrals inside the R blocks are
/// composite trapezoids over the profile grid, accumulated backward from tN
/// so every node costs O(1) given the next one.
class CostSystemBuilder {
 public:
  CostSystemBuilder(const GameDefinition& game, const StrategyProfile& profile,
                    int player)
      : game_(game), profile_(profile), player_(player) {
    if (player < 0 || player >= game.num_players())
      throw std::invalid_argument("player index out of range");
    if (!profile.has_F())
      throw std::invalid_argument("profile does not store closed-loop matrices");
    if (profile.num_nodes() < 2)
      throw std::invalid_argument("profile grid too short");

    const int nodes = profile.num_nodes();
    const int N = game.num_players();
    const int mi = game.control_dim(player);
    const Matrix Bt = game.B[player].transpose();
    const Matrix I = Matrix::Identity(mi, mi);

    // Integrands at every node: for the own-input block
    //   G(s) = (B^T F^T K_i^T) (x) I + I (x) (B^T F^T K_i^T)
    //        + (B^T K_i^T) (x) (B^T K_i^T),
    // and for each other player j
    //   H_j(s) = (B^T K_j^T) (x) (B^T K_j^T).
    std::vector<Matrix> g(nodes);
    std::vector<std::vector<Matrix>> h(N);
    boundary_.resize(nodes);
    for (int k = 0; k < nodes; ++k) {
      const Matrix bfk =
          Bt * profile_.F[k].transpose() * profile_.K[player][k].transpose();
      const Matrix bk = Bt * profile_.K[player][k].transpose();
      g[k] = Eigen::kroneckerProduct(bfk, I).eval() +
             Eigen::kroneckerProduct(I, bfk).eval() +
             Eigen::kroneckerProduct(bk, bk).eval();
      boundary_[k] = Eigen::kroneckerProduct(bk, I).eval();
    }
    for (int j = 0; j < N; ++j) {
      if (j == player) continue;
      h[j].resize(nodes);
      for (int k = 0; k < nodes; ++k) {
        const Matrix bkj = Bt * profile_.K[j][k].transpose();
        h[j][k] = Eigen::kroneckerProduct(bkj, bkj).eval();
      }
    }

    // Backward cumulative trapezoid: I[k] = I[k+1] + dt/2 (f[k] + f[k+1]).
    int_own_.assign(nodes, Matrix::Zero(mi * mi, mi * mi));
    int_cross_.assign(N, {});
    for (int j = 0; j < N; ++j)
      if (j != player)
        int_cross_[j].assign(nodes, Matrix::Zero(mi * mi,
                                                 game.control_dim(j) *
                                                     game.control_dim(j)));
    for (int k = nodes - 2; k >= 0; --k) {
      const double half = 0.5 * (profile_.grid[k + 1] - profile_.grid[k]);
      int_own_[k] = int_own_[k + 1] + half * (g[k] + g[k + 1]);
      for (int j = 0; j < N; ++j)
        if (j != player)
          int_cross_[j][k] = int_cross_[j][k + 1] + half * (h[j][k] + h[j][k + 1]);
    }

    mq_base_ = Eigen::kroneckerProduct(Bt, Bt).eval();
  }

  /// The m_i^2 x p row block M_i(t_k).
  Matrix block_row(int node) const {
    const int nodes = profile_.num_nodes();
    if (node < 0 || node >= nodes)
      throw std::invalid_argument("node outside grid");

    const int n = game_.state_dim();
    const int N = game_.num_players();
    const int mi = game_.control_dim(player_);
    const double tN = profile_.grid[nodes - 1];

    Matrix row(mi * mi, game_.param_dim());
    row.leftCols(n * n) = (tN - profile_.grid[node]) * mq_base_;
    int off = n * n;
    for (int j = 0; j < N; ++j) {
      const int mj = game_.control_dim(j);
      if (j == player_)
        row.middleCols(off, mj * mj) = int_own_[node] - boundary_[node];
      else
        row.middleCols(off, mj * mj) = int_cross_[j][node];
      off += mj * mj;
    }
    return row;
  }

 private:
  const GameDefinition& game_;
  const StrategyProfile& profile_;
  int player_;
  Matrix mq_base_;                               // B^T (x) B^T
  std::vector<Matrix> boundary_;                 // (B^T K_i^T) (x) I per node
  std::vector<Matrix> int_own_;                  // cumulative own-input integral
  std::vector<std::vector<Matrix>> int_cross_;   // per player j != i
};

inline Matrix build_M_blocks(const GameDefinition& game,
                             const StrategyProfile& profile, int player,
                             int node) {
  return CostSystemBuilder(game, profile, player).block_row(node);
}

/// Rank cutoff relative to sigma_max. The stacked blocks carry trapezoid
/// quadrature error, so the null singular value bottoms out around
/// sigma_max * h^2 rather than machine precision; 1e-5 sits above that
/// floor on benchmark-scale grids and well below the identifiability
/// margin, so the one-dimensional null space is measured as rank p - 1.
inline constexpr double kRankTolerance = 1e-5;

inline int numerical_rank(const Vector& singular_values,
                          double tol = kRankTolerance) {
  if (singular_values.size() == 0) return 0;
  const double cutoff = singular_values(0) * tol;
  int r = 0;
  for (int i = 0; i < singular_values.size(); ++i)
    if (singular_values(i) > cutoff) ++r;
  return r;
}

/// Evaluation nodes for a K-row stack: equally spaced grid indices including
/// t0 and excluding tN (whose row block is identically zero).
inline std::vector<int> select_nodes(int grid_intervals, int count) {
  if (count < 1 || count > grid_intervals)
    throw std::invalid_argument("node count must be in [1, grid intervals]");
  std::vector<int> nodes(count);
  for (int j = 0; j < count; ++j)
    nodes[j] = static_cast<int>((static_cast<long long>(j) * grid_intervals) / count);
  return nodes;
}

inline CostInferenceSystem stack_system(const GameDefinition& game,
                                        const StrategyProfile& profile,
                                        int player,
                                        const std::vector<int>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("no evaluation nodes given");
  const CostSystemBuilder builder(game, profile, player);

  CostInferenceSystem sys;
  sys.player = player;
  sys.p = game.param_dim();
  sys.nodes = nodes;
  const int mi2 = game.control_dim(player) * game.control_dim(player);
  sys.M.resize(static_cast<int>(nodes.size()) * mi2, sys.p);
  for (size_t r = 0; r < nodes.size(); ++r)
    sys.M.middleRows(static_cast<int>(r) * mi2, mi2) = builder.block_row(nodes[r]);

  Eigen::BDCSVD<Matrix> svd(sys.M);
  sys.singular_values = Vector::Zero(sys.p);
  sys.singular_values.head(svd.singularValues().size()) = svd.singularValues();
  sys.rank = numerical_rank(sys.singular_values);
  return sys;
}

struct NullSpaceSolution {
  Vector theta;            // normalized null vector
  Vector singular_values;  // copy of the system spectrum
  double gap_ratio = 0.0;  // sigma_{p-1} / sigma_p, identifiability margin
  int rank = 0;
  bool rank_consistent = false;  // rank == p - 1
  bool inconsistent = false;     // rank == p: no null vector beyond noise floor
};

/// Extracts the right singular vector of the smallest singular value and
/// normalizes it: sign so the reconstructed Q has a positive leading
/// diagonal entry, scale so that entry is one (falling back to the first
/// usable diagonal of R_ii when Q(0,0) vanishes).
inline NullSpaceSolution solve_null_space(const CostInferenceSystem& sys,
                                          const GameDefinition& game) {
  const int p = sys.p;
  if (sys.rank < p - 1) {
    throw IdentifiabilityError(
        "ambiguous identification for player " + std::to_string(sys.player + 1) +
        ": null space dimension " + std::to_string(p - sys.rank));
  }

  Eigen::BDCSVD<Matrix> svd(sys.M, Eigen::ComputeFullV);
  NullSpaceSolution sol;
  sol.singular_values = sys.singular_values;
  sol.rank = sys.rank;
  sol.rank_consistent = (sys.rank == p - 1);
  sol.inconsistent = (sys.rank == p);
  sol.gap_ratio = sys.singular_values(p - 1) > 0.0
                      ? sys.singular_values(p - 2) / sys.singular_values(p - 1)
                      : std::numeric_limits<double>::infinity();
  sol.theta = svd.matrixV().col(p - 1);

  // Normalization: Q(0,0) = theta(0); R_ii diagonal entries follow the
  // vectorization offsets.
  const double scale_floor = 1e-8 * sol.theta.cwiseAbs().maxCoeff();
  double pivot = sol.theta(0);
  if (std::abs(pivot) <= scale_floor) {
    const int n = game.state_dim();
    int off = n * n;
    for (int j = 0; j < sys.player; ++j) {
      const int mj = game.control_dim(j);
      off += mj * mj;
    }
    const int mi = game.control_dim(sys.player);
    pivot = 0.0;
    for (int d = 0; d < mi; ++d) {
      const double cand = sol.theta(off + d * (mi + 1));
      if (std::abs(cand) > scale_floor) {
        pivot = cand;
        break;
      }
    }
    if (pivot == 0.0)
      throw IdentifiabilityError("null vector has no usable normalization entry");
  }
  sol.theta /= pivot;
  return sol;
}

struct RecoveredCost {
  PlayerCost cost;
  std::vector<std::string> violations;  // definiteness issues beyond tolerance
};

/// Devectorizes a recovered theta into (Q, R_i1..R_iN): each block is
/// symmetrized, the coupling blocks R_ij (j != i) get small negative
/// eigenvalues clipped to zero, and definiteness violations beyond
/// tolerance are reported rather than silently fixed. An indefinite Q or
/// R_ii means the sign convention or the rank assumption failed and is an
/// error.
///
/// `tol` is relative to the largest recovered block: quadrature-limited
/// estimates leak noise of that scale into blocks that are truly zero, so
/// thresholds tied to a block's own norm would misread the leakage as a
/// violation.
inline RecoveredCost recover_costs(const Vector& theta,
                                   const GameDefinition& game, int player,
                                   double tol = 1e-2) {
  RecoveredCost rec;
  rec.cost = devectorize_costs(theta, game);

  double scale = detail::sym_norm(rec.cost.Q);
  for (const auto& r : rec.cost.R) scale = std::max(scale, detail::sym_norm(r));
  const double threshold = tol * std::max(1.0, scale);

  auto check_pd = [&](const Matrix& m, const std::string& name) {
    if (detail::min_eigenvalue(m) < -threshold)
      throw IdentifiabilityError(name +
                                 " indefinite beyond tolerance; scale sign or "
                                 "rank assumption failed");
  };
  check_pd(rec.cost.Q, "recovered Q_" + std::to_string(player + 1));
  check_pd(rec.cost.R[player],
           "recovered R_" + std::to_string(player + 1) + std::to_string(player + 1));

  for (int j = 0; j < game.num_players(); ++j) {
    if (j == player) continue;
    Matrix& r = rec.cost.R[j];
    Eigen::SelfAdjointEigenSolver<Matrix> es(r);
    Vector ev = es.eigenvalues();
    bool clipped = false;
    for (int s = 0; s < ev.size(); ++s) {
      if (ev(s) < -threshold) {
        rec.violations.push_back(
            "recovered R_" + std::to_string(player + 1) + std::to_string(j + 1) +
            " not positive semidefinite (eigenvalue " + std::to_string(ev(s)) + ")");
      } else if (ev(s) < 0.0) {
        ev(s) = 0.0;
        clipped = true;
      }
    }
    if (clipped)
      r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }
  return rec;
}

}  // namespace lqgame
