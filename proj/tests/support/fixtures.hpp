#pragma once

#include <lqgame/lqgame.hpp>

namespace lqgame::testing {

/// The two-player benchmark game used throughout the suite:
///   A = [[1,-1],[1,0]], B1 = B2 = I2, x0 = (2,-2),
///   Q1 = diag(1,1), Q2 = diag(1,10),
///   R11 = diag(1,1), R22 = diag(1,2), R12 = R21 = 0,
///   L = diag(0.1,0.2), horizon [0,5] with 500 steps.
inline GameDefinition two_player_game(int steps = 500) {
  GameDefinition game;
  game.A.resize(2, 2);
  game.A << 1.0, -1.0, 1.0, 0.0;
  game.B = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  game.x0.resize(2);
  game.x0 << 2.0, -2.0;
  game.t0 = 0.0;
  game.tN = 5.0;
  game.steps = steps;
  return game;
}

inline CostParameters two_player_costs() {
  CostParameters costs;
  PlayerCost p1, p2;
  p1.Q = Vector::Constant(2, 1.0).asDiagonal();
  p1.R = {Matrix(Vector::Constant(2, 1.0).asDiagonal()), Matrix::Zero(2, 2)};
  Vector q2(2), r22(2);
  q2 << 1.0, 10.0;
  r22 << 1.0, 2.0;
  p2.Q = q2.asDiagonal();
  p2.R = {Matrix::Zero(2, 2), Matrix(r22.asDiagonal())};
  costs.players = {p1, p2};
  return costs;
}

inline NoiseModel two_player_noise(int steps = 500) {
  NoiseModel noise;
  noise.l.resize(2);
  noise.l << 0.1, 0.2;
  noise.dt = 5.0 / steps;
  return noise;
}

/// Independent classical finite-horizon LQR oracle. Integrates
///   dP/dt = -Q - P A - A^T P + P B R^{-1} B^T P
/// backward from P(tN) = 0 with RK4, deliberately using the open-loop
/// A-form rather than the solver's gain-substitution form.
inline std::vector<Matrix> lqr_riccati_reference(const Matrix& A,
                                                 const Matrix& B,
                                                 const Matrix& Q,
                                                 const Matrix& R, double t0,
                                                 double tN, int steps,
                                                 int substeps) {
  const Matrix Rinv = R.inverse();
  const Matrix G = B * Rinv * B.transpose();
  auto rhs = [&](const Matrix& P) -> Matrix {
    return -Q - P * A - A.transpose() * P + P * G * P;
  };

  std::vector<Matrix> out(steps + 1);
  Matrix P = Matrix::Zero(A.rows(), A.cols());
  out[steps] = P;
  const double h = -(tN - t0) / (static_cast<double>(steps) * substeps);
  for (int k = steps; k > 0; --k) {
    for (int s = 0; s < substeps; ++s) {
      const Matrix k1 = rhs(P);
      const Matrix k2 = rhs(P + 0.5 * h * k1);
      const Matrix k3 = rhs(P + 0.5 * h * k2);
      const Matrix k4 = rhs(P + h * k3);
      P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      P = 0.5 * (P + P.transpose()).eval();
    }
    out[k - 1] = P;
  }
  return out;
}

inline double max_relative_error(const Matrix& a, const Matrix& b,
                                 double floor = 1e-300) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace lqgame::testing
