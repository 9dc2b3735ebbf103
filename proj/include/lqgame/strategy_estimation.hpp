#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <limits>
#include <vector>

#include "lqgame/game.hpp"

namespace lqgame {

/// Per-node data matrices: X stacks the D state columns, U[i] the D control
/// columns of player i, demonstrations in index order.
struct Snapshot {
  Matrix X;                // n x D
  std::vector<Matrix> U;   // per player, m_i x D
};

inline Snapshot assemble_snapshot(const TrajectoryBundle& bundle, int node) {
  check_bundle(bundle);
  if (node < 0 || node >= bundle.num_nodes())
    throw std::invalid_argument("snapshot node outside grid");

  const int D = bundle.demo_count();
  Snapshot snap;
  snap.X.resize(bundle.state_dim(), D);
  for (int i = 0; i < bundle.num_players(); ++i)
    snap.U.emplace_back(bundle.demos[0].u[i].rows(), D);
  for (int d = 0; d < D; ++d) {
    snap.X.col(d) = bundle.demos[d].x.col(node);
    for (int i = 0; i < bundle.num_players(); ++i)
      snap.U[i].col(d) = bundle.demos[d].u[i].col(node);
  }
  return snap;
}

/// Persistence-of-excitation proxy: condition number of X(t_k) X(t_k)^T per
/// node, with nodes above the threshold flagged.
struct ExcitationReport {
  std::vector<double> cond;
  std::vector<char> flagged;
  double threshold = 0.0;

  bool any_flagged() const {
    for (char f : flagged)
      if (f) return true;
    return false;
  }
};

struct GainEstimate {
  StrategyProfile profile;  // stores K only
  ExcitationReport excitation;
};

/// Recovers K_i(t_k) from U_i(t_k) = -K_i(t_k) X(t_k) per node, solving the
/// least-squares problem by complete orthogonal decomposition instead of the
/// normal-equations inverse; identical in exact arithmetic, far better
/// conditioned, and it yields the minimum-norm solution on flagged nodes.
///
/// A shared initial state makes X(t0) rank one, so t0 (and any leading run
/// of flagged nodes) is backfilled with the earliest unflagged estimate.
inline GainEstimate estimate_gains(const TrajectoryBundle& bundle,
                                   double cond_threshold = 1e8) {
  check_bundle(bundle);
  if (!(cond_threshold > 0.0))
    throw std::invalid_argument("condition threshold must be positive");

  const int nodes = bundle.num_nodes();
  const int N = bundle.num_players();
  constexpr double inf = std::numeric_limits<double>::infinity();

  GainEstimate est;
  est.profile.grid = bundle.grid;
  est.profile.K.assign(N, std::vector<Matrix>(nodes));
  est.excitation.threshold = cond_threshold;
  est.excitation.cond.assign(nodes, inf);
  est.excitation.flagged.assign(nodes, 0);

  for (int k = 0; k < nodes; ++k) {
    const Snapshot snap = assemble_snapshot(bundle, k);

    Eigen::JacobiSVD<Matrix> svd(snap.X);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double smin = sv(sv.size() - 1);
    // cond(X X^T) = (sigma_max / sigma_min)^2
    const double c = (smin > 0.0 && snap.X.rows() <= snap.X.cols())
                         ? (smax / smin) * (smax / smin)
                         : inf;
    est.excitation.cond[k] = c;
    est.excitation.flagged[k] = !(c < cond_threshold);

    // K^T solves X^T K^T = -U^T in the least-squares sense.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(snap.X.transpose());
    for (int i = 0; i < N; ++i)
      est.profile.K[i][k] = cod.solve(-snap.U[i].transpose()).transpose();
  }

  // Backfill the leading flagged run (the shared-x0 degeneracy at t0).
  int first_clear = 0;
  while (first_clear < nodes && est.excitation.flagged[first_clear]) ++first_clear;
  if (first_clear > 0 && first_clear < nodes) {
    for (int k = 0; k < first_clear; ++k)
      for (int i = 0; i < N; ++i) est.profile.K[i][k] = est.profile.K[i][first_clear];
  }
  return est;
}

}  // namespace lqgame
