#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sloppy/dataset.hpp"
#include "sloppy/param_space.hpp"

namespace sloppy {

struct ModelEval {
  Eigen::VectorXd predictions;
  bool converged = true;
};

// Pluggable mechanistic model.  predict is pure given (theta, conditions);
// instances are immutable, so callers may evaluate many parameter vectors
// concurrently.  theta is the full vector aligned with space() (the noise
// parameter is carried along but ignored by predict).
class Model {
 public:
  virtual ~Model() = default;
  virtual const ParameterSpace& space() const = 0;
  virtual std::string name() const = 0;
  virtual ModelEval predict(const Eigen::VectorXd& theta,
                            const std::vector<Condition>& conditions) const = 0;
  // Model with the dropped mechanisms' flux terms removed; its space
  // equals remove_mechanisms(space(), drop).
  virtual std::unique_ptr<Model> reduce(const std::set<std::string>& drop) const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;
};

struct SteadyStateResult {
  Eigen::VectorXd state;
  bool converged = false;
  int iterations = 0;
};

// Damped Newton root finder for flux(state) = 0 with a forward-difference
// Jacobian and backtracking line search.  Converged means
// ||flux(state)||_inf <= tol * (1 + ||state||_inf).
SteadyStateResult steady_state(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& flux,
    Eigen::VectorXd guess, int max_iterations = 200, double tol = 1e-10);

}  // namespace sloppy
