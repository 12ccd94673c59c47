#include "sloppy/optimize.hpp"

#include <cmath>
#include <limits>

namespace sloppy {

namespace {

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult result;
  result.x = std::move(x0);
  result.value = f(result.x);
  if (!std::isfinite(result.value)) return result;

  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = numeric_gradient(f, result.x, options.fd_step);
  if (!g.allFinite()) return result;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      result.converged = true;
      return result;
    }
    Eigen::VectorXd dir = -(Hinv * g);
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {  // reset on loss of descent
      Hinv.setIdentity();
      dir = -g;
      slope = g.dot(dir);
    }

    // Armijo backtracking.
    double step = 1.0;
    double fn = std::numeric_limits<double>::infinity();
    Eigen::VectorXd xn;
    bool accepted = false;
    while (step > 1e-14) {
      xn = result.x + step * dir;
      fn = f(xn);
      if (std::isfinite(fn) && fn <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // gradient too noisy to make progress; report current point
      result.converged = g.lpNorm<Eigen::Infinity>() <= options.grad_tol;
      return result;
    }

    Eigen::VectorXd gn = numeric_gradient(f, xn, options.fd_step);
    if (!gn.allFinite()) {
      result.x = std::move(xn);
      result.value = fn;
      return result;
    }
    Eigen::VectorXd s = xn - result.x;
    Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    result.x = std::move(xn);
    result.value = fn;
    g = std::move(gn);
  }
  result.converged = g.lpNorm<Eigen::Infinity>() <= options.grad_tol;
  return result;
}

}  // namespace sloppy
