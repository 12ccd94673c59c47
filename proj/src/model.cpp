#include "sloppy/model.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sloppy/errors.hpp"

namespace sloppy {

double Condition::at(const std::string& name) const {
  auto it = inputs.find(name);
  if (it == inputs.end()) throw KeyError("condition has no input named " + name);
  return it->second;
}

namespace {
double inf_norm(const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }
}  // namespace

SteadyStateResult steady_state(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& flux,
    Eigen::VectorXd guess, int max_iterations, double tol) {
  SteadyStateResult result;
  const Eigen::Index n = guess.size();
  Eigen::VectorXd x = std::move(guess);
  Eigen::VectorXd f = flux(x);
  if (!f.allFinite()) return result;

  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it;
    if (inf_norm(f) <= tol * (1.0 + inf_norm(x))) {
      result.state = x;
      result.converged = true;
      return result;
    }
    // Forward-difference Jacobian.
    Eigen::MatrixXd J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x[j]));
      Eigen::VectorXd xp = x;
      xp[j] += h;
      Eigen::VectorXd fp = flux(xp);
      if (!fp.allFinite()) return result;
      J.col(j) = (fp - f) / h;
    }
    Eigen::VectorXd step = J.fullPivLu().solve(-f);
    if (!step.allFinite()) return result;

    // Backtrack until the residual shrinks.
    double t = 1.0;
    const double f0 = inf_norm(f);
    bool accepted = false;
    while (t > 1e-10) {
      Eigen::VectorXd xn = x + t * step;
      Eigen::VectorXd fn = flux(xn);
      if (fn.allFinite() && inf_norm(fn) < f0) {
        x = std::move(xn);
        f = std::move(fn);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return result;  // stalled
  }
  if (inf_norm(f) <= tol * (1.0 + inf_norm(x))) {
    result.state = x;
    result.converged = true;
  }
  return result;
}

}  // namespace sloppy
