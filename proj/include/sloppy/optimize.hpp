#pragma once

#include <Eigen/Core>
#include <functional>

namespace sloppy {

struct BfgsOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;  // infinity norm
  double fd_step = 1e-7;   // relative central-difference step for gradients
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Quasi-Newton minimizer (BFGS, inverse-Hessian form) with numerical
// central-difference gradients and Armijo backtracking.  Intended for
// unbounded objectives; box constraints are handled upstream by the logit
// transform.  The objective may return +inf to mark infeasible points.
BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& options = {});

}  // namespace sloppy
