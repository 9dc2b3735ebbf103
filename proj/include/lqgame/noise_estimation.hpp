#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "lqgame/game.hpp"

namespace lqgame {

/// Euler-Maruyama residuals of a bundle, one n x K matrix per demonstration:
///   dx_k = x_{k+1} - x_k - (A x_k + sum_i B_i u_{i,k}) dt.
/// The recorded controls are used, not reconstructed feedback, so noise
/// estimation stays decoupled from strategy-estimation error.
struct ResidualSet {
  std::vector<Matrix> dx;  // per demo, n x (nodes - 1)
  double dt = 0.0;

  int state_dim() const { return dx.empty() ? 0 : static_cast<int>(dx[0].rows()); }
  long long sample_count() const {
    long long c = 0;
    for (const auto& m : dx) c += m.cols();
    return c;
  }
};

inline ResidualSet residuals(const TrajectoryBundle& bundle,
                             const GameDefinition& game) {
  check_bundle(bundle);
  const int n = bundle.state_dim();
  if (n != game.state_dim() || bundle.num_players() != game.num_players())
    throw std::invalid_argument("bundle dimensions do not match the game");
  const int steps = bundle.num_nodes() - 1;
  if (steps < 1) throw std::invalid_argument("bundle has no transitions");

  ResidualSet res;
  res.dt = bundle.dt();
  for (const auto& d : bundle.demos) {
    Matrix dx(n, steps);
    for (int k = 0; k < steps; ++k) {
      Vector drift = game.A * d.x.col(k);
      for (int i = 0; i < game.num_players(); ++i)
        drift.noalias() += game.B[i] * d.u[i].col(k);
      dx.col(k) = d.x.col(k + 1) - (d.x.col(k) + drift * res.dt);
    }
    res.dx.push_back(std::move(dx));
  }
  return res;
}

/// Closed-form maximum likelihood covariance of the noise increments:
///   LL^T = 1/(D K dt) * sum_{d,k} dx dx^T.
/// Symmetric positive semidefinite by construction.
inline Matrix mle_covariance(const ResidualSet& res) {
  if (res.dx.empty() || res.sample_count() == 0)
    throw std::invalid_argument("empty residual set");
  if (!(res.dt > 0.0)) throw std::invalid_argument("dt must be positive");

  const int n = res.state_dim();
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& m : res.dx) acc.noalias() += m * m.transpose();
  acc /= static_cast<double>(res.sample_count()) * res.dt;
  return 0.5 * (acc + acc.transpose());
}

struct NoiseFit {
  NoiseModel noise;
  /// Off-diagonal mass of the covariance relative to its diagonal,
  /// ||offdiag||_F / ||diag||_F; nonzero values measure how far the data is
  /// from the diagonal-L model.
  double offdiag_ratio = 0.0;
};

/// L = diag(sqrt of the covariance diagonal). Off-diagonal mass is reported,
/// never folded into L.
inline NoiseFit recover_L(const Matrix& cov, double dt) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance not square");
  const int n = static_cast<int>(cov.rows());

  NoiseFit fit;
  fit.noise.dt = dt;
  fit.noise.l.resize(n);
  for (int s = 0; s < n; ++s) {
    const double v = cov(s, s);
    if (!(v > 0.0))
      throw IdentifiabilityError("degenerate noise: covariance diagonal entry " +
                                 std::to_string(s + 1) + " not positive");
    fit.noise.l[s] = std::sqrt(v);
  }
  const Matrix diag = cov.diagonal().asDiagonal();
  const double dnorm = diag.norm();
  fit.offdiag_ratio = dnorm > 0.0 ? (cov - diag).norm() / dnorm : 0.0;
  return fit;
}

/// Gaussian log-likelihood of the residuals under increment covariance
/// cov * dt:
///   -1/2 sum_{d,k} [ n log(2 pi dt) + log det(cov) + dx^T cov^{-1} dx / dt ].
inline double log_likelihood(const ResidualSet& res, const Matrix& cov) {
  const int n = res.state_dim();
  if (cov.rows() != n || cov.cols() != n)
    throw std::invalid_argument("covariance dimension mismatch");

  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("covariance not positive definite");

  const Matrix& Lf = llt.matrixL();
  double logdet = 0.0;
  for (int s = 0; s < n; ++s) logdet += 2.0 * std::log(Lf(s, s));

  const double count = static_cast<double>(res.sample_count());
  double quad = 0.0;
  for (const auto& m : res.dx)
    quad += llt.matrixL().solve(m).squaredNorm();

  return -0.5 * (count * (n * std::log(2.0 * M_PI * res.dt) + logdet) +
                 quad / res.dt);
}

}  // namespace lqgame
