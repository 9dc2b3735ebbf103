#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "lqgame/game.hpp"
#include "lqgame/simulate.hpp"

namespace lqgame {

/// Maximum relative deviations between ground-truth and estimated moment
/// series, normalized by the ground-truth maximum; the four study metrics
/// plus bookkeeping for one pipeline repetition.
struct ErrorReport {
  double e_mu_x = 0.0;
  double e_mu_u = 0.0;
  double e_var_x = 0.0;
  double e_var_u = 0.0;
  double t_C = 0.0;   // identification wall-clock seconds
  int K_eval = 0;
  int D = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// max_t ||gt(t) - est(t)||_inf / max_t ||gt(t)||_inf
inline double relative_deviation(const Matrix& gt, const Matrix& est) {
  const double denom = max_abs(gt);
  if (!(denom > 0.0))
    throw NumericalError("undefined metric: ground-truth series is zero");
  return max_abs(gt - est) / denom;
}

}  // namespace detail

/// The metrics are asymmetric by definition: only the first argument
/// normalizes.
inline ErrorReport trajectory_errors(const MomentSeries& gt,
                                     const MomentSeries& est) {
  if (gt.grid.size() != est.grid.size() ||
      gt.u_mean.size() != est.u_mean.size())
    throw std::invalid_argument("moment series not on the same grid");

  ErrorReport rep;
  rep.e_mu_x = detail::relative_deviation(gt.x_mean, est.x_mean);
  rep.e_var_x = detail::relative_deviation(gt.x_var, est.x_var);
  rep.e_mu_u = 0.0;
  rep.e_var_u = 0.0;
  for (size_t i = 0; i < gt.u_mean.size(); ++i) {
    rep.e_mu_u = std::max(rep.e_mu_u,
                          detail::relative_deviation(gt.u_mean[i], est.u_mean[i]));
    rep.e_var_u = std::max(rep.e_var_u,
                           detail::relative_deviation(gt.u_var[i], est.u_var[i]));
  }
  return rep;
}

/// Monte-Carlo estimate of player i's cost: trapezoidal time integral of
/// x^T Q_i x + sum_j u_j^T R_ij u_j, averaged over the demonstrations.
inline double evaluate_cost(const TrajectoryBundle& bundle,
                            const CostParameters& costs, int player) {
  check_bundle(bundle);
  if (player < 0 || player >= static_cast<int>(costs.players.size()))
    throw std::invalid_argument("player index out of range");

  const auto& pc = costs.players[player];
  const int nodes = bundle.num_nodes();
  double total = 0.0;
  for (const auto& demo : bundle.demos) {
    double integral = 0.0;
    double prev = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const Vector x = demo.x.col(k);
      double val = x.dot(pc.Q * x);
      for (size_t j = 0; j < demo.u.size(); ++j) {
        const Vector uj = demo.u[j].col(k);
        val += uj.dot(pc.R[j] * uj);
      }
      if (k > 0) integral += 0.5 * (bundle.grid[k] - bundle.grid[k - 1]) * (prev + val);
      prev = val;
    }
    total += integral;
  }
  return total / bundle.demo_count();
}

}  // namespace lqgame
