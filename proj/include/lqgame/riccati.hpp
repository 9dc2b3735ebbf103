#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "lqgame/game.hpp"

namespace lqgame {

/// Backward integration scheme for the coupled Riccati terminal-value
/// problem. The coupled quadratic ODE gets stiff for aggressive weights, so
/// the default is rk4 with 10 substeps per grid interval.
struct RiccatiSolverConfig {
  enum class Integrator { rk4, euler };
  Integrator integrator = Integrator::rk4;
  int substeps = 10;
  bool stability_check = false;
};

/// F = A - sum_i B_i K_i.
inline Matrix closed_loop_matrix(const GameDefinition& game,
                                 const std::vector<Matrix>& gains) {
  const int n = game.state_dim();
  if (static_cast<int>(gains.size()) != game.num_players())
    throw std::invalid_argument("one gain matrix per player required");
  Matrix F = game.A;
  for (int i = 0; i < game.num_players(); ++i) {
    if (gains[i].rows() != game.control_dim(i) || gains[i].cols() != n)
      throw std::invalid_argument("gain dimension mismatch for player " +
                                  std::to_string(i + 1));
    F.noalias() -= game.B[i] * gains[i];
  }
  return F;
}

/// Fills profile.F from its stored gains. Estimated profiles carry only K;
/// the cost-inference blocks need F as well.
inline void attach_closed_loop(StrategyProfile& profile,
                               const GameDefinition& game) {
  profile.F.resize(profile.num_nodes());
  for (int k = 0; k < profile.num_nodes(); ++k)
    profile.F[k] = closed_loop_matrix(game, profile.gains_at(k));
}

struct StabilityReport {
  std::vector<double> max_real_part;  // per grid node, eigenvalues of F(t_k)
  bool stable = false;                // all strictly negative
};

inline StabilityReport check_stability(const StrategyProfile& profile) {
  if (!profile.has_F())
    throw std::invalid_argument("profile does not store closed-loop matrices");
  StabilityReport rep;
  rep.stable = true;
  rep.max_real_part.reserve(profile.F.size());
  for (const auto& f : profile.F) {
    Eigen::EigenSolver<Matrix> es(f, /*computeEigenvectors=*/false);
    const double mx = es.eigenvalues().real().maxCoeff();
    rep.max_real_part.push_back(mx);
    if (!(mx < 0.0)) rep.stable = false;
  }
  return rep;
}

namespace detail {

// Derivative of the N-tuple (P_1..P_N) with the gains substituted
// self-consistently:
//   K_j = R_jj^{-1} B_j^T P_j,  F = A - sum_j B_j K_j,
//   dP_i/dt = -Q_i - P_i F - F^T P_i - sum_j K_j^T R_ij K_j.
struct CoupledRiccatiRhs {
  const GameDefinition& game;
  const CostParameters& costs;
  std::vector<Eigen::PartialPivLU<Matrix>> Rii_lu;

  CoupledRiccatiRhs(const GameDefinition& g, const CostParameters& c)
      : game(g), costs(c) {
    for (int i = 0; i < g.num_players(); ++i) {
      const Matrix& rii = c.players[i].R[i];
      Eigen::FullPivLU<Matrix> probe(rii);
      if (!probe.isInvertible())
        throw NumericalError("R_" + std::to_string(i + 1) +
                             std::to_string(i + 1) + " is singular");
      Rii_lu.emplace_back(rii);
    }
  }

  std::vector<Matrix> gains(const std::vector<Matrix>& P) const {
    std::vector<Matrix> K(P.size());
    for (size_t j = 0; j < P.size(); ++j)
      K[j] = Rii_lu[j].solve(game.B[j].transpose() * P[j]);
    return K;
  }

  std::vector<Matrix> operator()(const std::vector<Matrix>& P) const {
    const std::vector<Matrix> K = gains(P);
    Matrix F = game.A;
    for (size_t j = 0; j < P.size(); ++j) F.noalias() -= game.B[j] * K[j];

    std::vector<Matrix> dP(P.size());
    for (size_t i = 0; i < P.size(); ++i) {
      Matrix d = -costs.players[i].Q;
      d.noalias() -= P[i] * F;
      d.noalias() -= F.transpose() * P[i];
      for (size_t j = 0; j < P.size(); ++j) {
        const Matrix& rij = costs.players[i].R[j];
        if (rij.isZero(0.0)) continue;
        d.noalias() -= K[j].transpose() * rij * K[j];
      }
      dP[i] = std::move(d);
    }
    return dP;
  }
};

inline void symmetrize(std::vector<Matrix>& P) {
  for (auto& p : P) p = 0.5 * (p + p.transpose()).eval();
}

inline bool all_finite(const std::vector<Matrix>& P) {
  for (const auto& p : P)
    if (!p.allFinite()) return false;
  return true;
}

}  // namespace detail

/// Solves the N coupled matrix Riccati differential equations backward from
/// P_i(tN) = 0 (the cost has no terminal term) and extracts the feedback
/// Nash gains K_i(t_k) = R_ii^{-1} B_i^T P_i(t_k) and closed-loop matrices
/// F(t_k) on the grid. P is re-symmetrized after every substep.
inline StrategyProfile solve_coupled_riccati(
    const GameDefinition& game, const CostParameters& costs,
    const RiccatiSolverConfig& cfg = {}) {
  if (static_cast<int>(costs.players.size()) != game.num_players())
    throw std::invalid_argument("cost parameters must cover every player");
  if (cfg.substeps < 1) throw std::invalid_argument("substeps must be >= 1");

  const int N = game.num_players();
  const int n = game.state_dim();
  const detail::CoupledRiccatiRhs rhs(game, costs);

  StrategyProfile profile;
  profile.grid = game.grid();
  profile.K.assign(N, std::vector<Matrix>(game.steps + 1));
  profile.P.assign(N, std::vector<Matrix>(game.steps + 1));
  profile.F.assign(game.steps + 1, Matrix());

  std::vector<Matrix> P(N, Matrix::Zero(n, n));
  const double h = -game.dt() / cfg.substeps;  // backward in time

  auto store_node = [&](int k) {
    const std::vector<Matrix> K = rhs.gains(P);
    for (int i = 0; i < N; ++i) {
      profile.P[i][k] = P[i];
      profile.K[i][k] = K[i];
    }
    profile.F[k] = closed_loop_matrix(game, K);
  };

  store_node(game.steps);  // terminal condition P_i(tN) = 0

  for (int k = game.steps; k > 0; --k) {
    for (int s = 0; s < cfg.substeps; ++s) {
      if (cfg.integrator == RiccatiSolverConfig::Integrator::euler) {
        const auto d1 = rhs(P);
        for (int i = 0; i < N; ++i) P[i] += h * d1[i];
      } else {
        const auto k1 = rhs(P);
        std::vector<Matrix> tmp(N);
        for (int i = 0; i < N; ++i) tmp[i] = P[i] + (0.5 * h) * k1[i];
        const auto k2 = rhs(tmp);
        for (int i = 0; i < N; ++i) tmp[i] = P[i] + (0.5 * h) * k2[i];
        const auto k3 = rhs(tmp);
        for (int i = 0; i < N; ++i) tmp[i] = P[i] + h * k3[i];
        const auto k4 = rhs(tmp);
        for (int i = 0; i < N; ++i)
          P[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      detail::symmetrize(P);
    }
    if (!detail::all_finite(P))
      throw NumericalError("coupled Riccati integration diverged at t = " +
                           std::to_string(game.time_at(k - 1)));
    store_node(k - 1);
  }

  if (cfg.stability_check) {
    const StabilityReport rep = check_stability(profile);
    if (!rep.stable)
      throw NumericalError("closed loop not strictly stable on the grid");
  }
  return profile;
}

}  // namespace lqgame
