#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) with a fixed multiplicative damping
// schedule, shared by the pose and contact-point solvers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace forcesolve::detail {

struct LmOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double max_damping = 1e12;
  double step_tol = 1e-14;
  double cost_tol = 1e-16;
};

struct LmSummary {
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  Eigen::MatrixXd normal_matrix;  // J^T J at the final estimate
};

// Problem interface:
//   std::optional<Eigen::VectorXd> residuals(const Params&)  (nullopt = infeasible)
//   Eigen::MatrixXd jacobian(const Params&)
//   Params retract(const Params&, const Eigen::VectorXd& delta)
template <typename Params, typename Problem>
LmSummary levenberg_marquardt(Params& params, const Problem& problem, const LmOptions& opts) {
  LmSummary summary;
  std::optional<Eigen::VectorXd> r = problem.residuals(params);
  if (!r) {
    summary.cost = std::numeric_limits<double>::infinity();
    return summary;
  }
  summary.cost = r->squaredNorm();
  double damping = opts.initial_damping;

  for (int it = 0; it < opts.max_iterations; ++it) {
    summary.iterations = it + 1;
    const Eigen::MatrixXd J = problem.jacobian(params);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * *r;
    if (Jtr.lpNorm<Eigen::Infinity>() == 0.0) break;

    bool accepted = false;
    while (damping <= opts.max_damping) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += damping * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = A.ldlt().solve(-Jtr);
      const Params candidate = problem.retract(params, delta);
      const std::optional<Eigen::VectorXd> rc = problem.residuals(candidate);
      if (rc && rc->allFinite() && rc->squaredNorm() <= summary.cost) {
        const double improvement = summary.cost - rc->squaredNorm();
        params = candidate;
        r = rc;
        summary.cost = rc->squaredNorm();
        damping = std::max(damping / opts.damping_down, 1e-15);
        accepted = true;
        if (delta.norm() < opts.step_tol || improvement <= opts.cost_tol * (1.0 + summary.cost)) {
          it = opts.max_iterations;  // converged
        }
        break;
      }
      damping *= opts.damping_up;
    }
    if (!accepted) break;
  }
  const Eigen::MatrixXd J = problem.jacobian(params);
  summary.normal_matrix = J.transpose() * J;
  return summary;
}

}  // namespace forcesolve::detail
