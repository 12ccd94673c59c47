#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "sloppy/dataset.hpp"
#include "sloppy/io.hpp"
#include "sloppy/model.hpp"

namespace sloppy {

// In-memory fixture: everything needed to write config.json, data.csv
// and oracle.json for one benchmark model.
struct Fixture {
  std::string name;
  ModelConfig config;
  Dataset data;
  std::vector<std::string> condition_columns;
  Eigen::VectorXd theta_star;  // generating truth, full space
  uint64_t seed = 0;
  nlohmann::json oracle;  // analytic / pre-build reference values
};

// name in {linear-log, exp-sum, toy-polyp}; regeneration with the same
// seed reproduces the committed files byte-for-byte.
Fixture generate_fixture(const std::string& name, uint64_t seed);

// Writes config.json, data.csv, oracle.json under dir.
void write_fixture(const Fixture& fx, const std::string& dir);

// Committed fixture seeds, used by the generator tool and the tests.
uint64_t fixture_default_seed(const std::string& name);

// J^T J / sigma^2 with J the numerical Jacobian of the predictions with
// respect to phi = ln(theta_model); independent cross-check of the
// MLE-Hessian matrix at zero-residual points.
Eigen::MatrixXd oracle_gauss_newton(const Model& model, const Eigen::VectorXd& theta,
                                    const Dataset& data, double sigma);

}  // namespace sloppy
