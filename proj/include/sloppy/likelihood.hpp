#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "sloppy/dataset.hpp"
#include "sloppy/model.hpp"

namespace sloppy {

struct LogLikelihoodValue {
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Gaussian i.i.d. log-likelihood with the noise sigma taken from the
// noise-role entry of theta:
//   -n_d ln(sqrt(2 pi) sigma) - sum_i (y_model_i - y_i)^2 / (2 sigma^2)
// A non-converged model evaluation yields the -inf sentinel.
LogLikelihoodValue log_likelihood(const Model& model, const Eigen::VectorXd& theta,
                                  const Dataset& data);

// Batched evaluation over many parameter vectors, one output slot per
// input; this is the hot loop of the SMC sampler and the Hessian
// stencils.  The parallel version writes each slot independently, so its
// output is byte-identical to the serial reference for any worker count.
void loglik_sweep(const Model& model, const Dataset& data,
                  const std::vector<Eigen::VectorXd>& thetas, std::span<double> out);
void loglik_sweep_serial(const Model& model, const Dataset& data,
                         const std::vector<Eigen::VectorXd>& thetas, std::span<double> out);

struct MleResult {
  Eigen::VectorXd theta;  // natural units, full space
  double loglik = 0.0;
  int start_index = 0;
  bool optimizer_converged = false;
  bool retained = false;
};

struct MleConfig {
  int n_starts = 100;
  int retain = 5;
  uint64_t seed = 0;
  int max_iterations = 500;
  double grad_tol = 1e-6;
};

// Multi-start bounded local optimization: quasi-Newton in the
// logit-transformed space from prior-drawn start points.  Returns all
// results sorted by loglik descending (ties broken by start index); the
// top `retain` converged results carry retained = true.  Throws
// OptimizationError when no start converges.
std::vector<MleResult> multi_start_mle(const Model& model, const Dataset& data,
                                       const MleConfig& config);

}  // namespace sloppy
