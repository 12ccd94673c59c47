#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sloppy/dataset.hpp"
#include "sloppy/likelihood.hpp"
#include "sloppy/model.hpp"
#include "sloppy/smc.hpp"

namespace sloppy {

enum class MatrixKind { hessian_mle, posterior_cov, lis };

// Symmetric sensitivity matrix over the model-role parameters in log
// space (noise parameter excluded).
struct SensitivityMatrix {
  MatrixKind kind = MatrixKind::hessian_mle;
  Eigen::MatrixXd entries;
  std::vector<std::string> param_names;
  std::vector<std::string> warnings;
  int subsample_size = 0;  // LIS only: how many particle Hessians were used
};

struct SloppySpectrum {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::VectorXd rescaled;      // lambda_j / lambda_1
  Eigen::MatrixXd eigenvectors;  // rows = params, cols = j, renormalized
  std::vector<std::string> param_names;
  std::vector<std::string> eigenparams;  // rendered product expressions
};

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

// Central second differences with absolute step delta per coordinate,
// symmetrized.  Stencil evaluations run in parallel; the serial variant
// is the reference for the benchmark and the bit-equality tests.
Eigen::MatrixXd hessian_fd(const ScalarFn& fn, const Eigen::VectorXd& center,
                           double delta = 1e-2);
Eigen::MatrixXd hessian_fd_serial(const ScalarFn& fn, const Eigen::VectorXd& center,
                                  double delta = 1e-2);

// Log-likelihood as a function of phi = ln(theta_model), sigma pinned.
ScalarFn loglik_of_log_params(const Model& model, const Dataset& data, double sigma);

// S_H = -hessian of the log-likelihood in log-parameter space at the MLE.
SensitivityMatrix matrix_hessian_mle(const Model& model, const Dataset& data,
                                     const MleResult& mle, double delta = 1e-2);

// S_P = inverse of the empirical covariance of ln(theta) over particles.
SensitivityMatrix matrix_posterior_cov(const ParticleSet& ps, const ParameterSpace& space);

struct LisConfig {
  double delta = 1e-2;
  uint64_t seed = 0;
  int prior_draws = 100000;  // for the empirical prior covariance Omega
  int max_hessians = 200;    // stratified particle subsample size
};

// S_L = average of L^T (-H(phi_m)) L over a particle subsample, Omega = L L^T.
SensitivityMatrix matrix_lis(const Model& model, const Dataset& data,
                             const ParticleSet& ps, const LisConfig& config);

// Eigendecomposition plus the renormalization and rendering steps.
SloppySpectrum analyze(const SensitivityMatrix& matrix);

// theta_hat_j as a product expression, exponents to 2 decimals; factors
// with |exponent| below trunc are omitted (full data stays in the CSVs).
std::string render_eigenparam(const std::vector<std::string>& names,
                              const Eigen::VectorXd& v, double trunc = 0.05);

}  // namespace sloppy
