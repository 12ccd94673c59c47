#include "sloppy/fixtures.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "sloppy/errors.hpp"
#include "sloppy/models_builtin.hpp"
#include "sloppy/param_space.hpp"
#include "sloppy/rng.hpp"

namespace sloppy {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd noisy(const Eigen::VectorXd& clean, double sigma, uint64_t seed) {
  Eigen::VectorXd y = clean;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] += sigma * Rng::keyed({seed, rng_tag::fixture_noise, static_cast<uint64_t>(i)})
                        .gaussian();
  return y;
}

Fixture make_linear_log(uint64_t seed) {
  Fixture fx;
  fx.name = "linear-log";
  fx.seed = seed;

  std::vector<ParameterSpec> specs = {
      {"t1", 0.05, 20.0, ParamRole::model},
      {"t2", 0.05, 20.0, ParamRole::model},
      {"t3", 0.05, 20.0, ParamRole::model},
      // Near-point bounds pin sigma so the conjugate oracle is exact.
      {"sigma", 0.0999, 0.1001, ParamRole::noise},
  };
  std::map<std::string, Mechanism> mechs = {
      {"term1", {{"t1"}, true}}, {"term2", {{"t2"}, true}}, {"term3", {{"t3"}, true}}};
  fx.config.space = ParameterSpace(specs, mechs);

  Eigen::MatrixXd A(10, 3);
  A << 1.0, 0.5, 0.2, 0.3, 1.0, 0.4, 0.8, 0.2, 1.0, 0.5, 0.5, 0.5, 1.2, 0.1, 0.3, 0.2,
      0.9, 0.7, 0.6, 1.1, 0.2, 0.4, 0.3, 1.1, 1.0, 1.0, 0.1, 0.1, 0.6, 0.9;
  fx.config.constants = json::object();
  fx.config.constants["design"] = matrix_to_json(A);

  const double sigma_star = 0.1;
  fx.theta_star.resize(4);
  fx.theta_star << 1.2, 0.8, 1.0, sigma_star;

  Eigen::Vector3d phi_star = fx.theta_star.head(3).array().log();
  Eigen::VectorXd clean = A * phi_star;
  Eigen::VectorXd y = noisy(clean, sigma_star, seed);

  fx.condition_columns = {"row"};
  fx.data.observed = y;
  for (Eigen::Index r = 0; r < y.size(); ++r)
    fx.data.conditions.push_back({{{"row", static_cast<double>(r)}}});

  // Conjugate posterior of phi under the flat-in-theta prior: the Jacobian
  // of theta = exp(phi) tilts the least-squares mean by sigma^2 (A^T A)^{-1} 1.
  Eigen::Matrix3d ata = A.transpose() * A;
  Eigen::Matrix3d ata_inv = ata.inverse();
  Eigen::Vector3d phi_ls = ata_inv * (A.transpose() * y);
  Eigen::Vector3d mean = phi_ls + sigma_star * sigma_star * ata_inv * Eigen::Vector3d::Ones();
  Eigen::Matrix3d cov = sigma_star * sigma_star * ata_inv;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(ata);
  fx.oracle["sensitivity"] = matrix_to_json(ata / (sigma_star * sigma_star));
  fx.oracle["posterior_mean_phi"] = std::vector<double>(mean.data(), mean.data() + 3);
  fx.oracle["posterior_cov_phi"] = matrix_to_json(cov);
  fx.oracle["leading_eigenvector"] = std::vector<double>(es.eigenvectors().col(2).data(),
                                                         es.eigenvectors().col(2).data() + 3);
  fx.oracle["sigma_star"] = sigma_star;
  fx.oracle["seed"] = seed;
  return fx;
}

Fixture make_exp_sum(uint64_t seed) {
  Fixture fx;
  fx.name = "exp-sum";
  fx.seed = seed;

  std::vector<ParameterSpec> specs = {
      {"a1", 0.1, 10.0, ParamRole::model}, {"r1", 0.01, 5.0, ParamRole::model},
      {"a2", 0.1, 10.0, ParamRole::model}, {"r2", 0.1, 20.0, ParamRole::model},
      {"sigma", 0.005, 0.5, ParamRole::noise},
  };
  std::map<std::string, Mechanism> mechs = {{"term1", {{"a1", "r1"}, true}},
                                            {"term2", {{"a2", "r2"}, true}}};
  fx.config.space = ParameterSpace(specs, mechs);
  fx.config.constants = json::object();

  const double sigma_star = 0.05;
  fx.theta_star.resize(5);
  fx.theta_star << 2.0, 0.5, 1.0, 3.0, sigma_star;

  fx.condition_columns = {"t"};
  for (int i = 0; i <= 12; ++i)
    fx.data.conditions.push_back({{{"t", 0.25 * i}}});

  ExpSumModel model(fx.config.space);
  // Zero-residual data: the Gauss-Newton oracle then equals the exact
  // negative log-likelihood Hessian.
  fx.data.observed = model.predict(fx.theta_star, fx.data.conditions).predictions;

  Eigen::MatrixXd gn = oracle_gauss_newton(model, fx.theta_star, fx.data, sigma_star);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gn);
  Eigen::VectorXd evals = es.eigenvalues().reverse();
  fx.oracle["gauss_newton"] = matrix_to_json(gn);
  fx.oracle["eigenvalues"] = std::vector<double>(evals.data(), evals.data() + evals.size());
  fx.oracle["sigma_star"] = sigma_star;
  fx.oracle["seed"] = seed;
  return fx;
}

Fixture make_toy_polyp(uint64_t seed) {
  Fixture fx;
  fx.name = "toy-polyp";
  fx.seed = seed;

  // Bounds are sized so the box-length flat ridges (Vmax1/alpha/beta and
  // the channel sum) stay traversable by the move kernel at M = 5000;
  // runs with wider boxes were not seed-reproducible at that budget.
  std::vector<ParameterSpec> specs = {
      {"s", 1.0, 5.0, ParamRole::model},       {"k_pp", 0.1, 0.9, ParamRole::model},
      {"k_co2", 0.0, 0.1, ParamRole::model},   {"Vmax1", 0.4, 2.0, ParamRole::model},
      {"Km1", 0.2, 2.0, ParamRole::model},     {"alpha", 0.2, 0.9, ParamRole::model},
      {"beta", 0.1, 0.8, ParamRole::model},    {"Vmax2", 0.0, 0.05, ParamRole::model},
      {"Km2", 0.1, 10.0, ParamRole::model},    {"sigma", 0.02, 0.2, ParamRole::noise},
  };
  std::map<std::string, Mechanism> mechs = {
      {"seawater-diffusion", {{"s"}, false}},
      {"kpp-channel", {{"k_pp"}, true}},
      {"kco2-channel", {{"k_co2"}, true}},
      {"pump1", {{"Vmax1", "Km1", "alpha", "beta"}, true}},
      {"pump2", {{"Vmax2", "Km2"}, true}},
      {"calcification", {{}, false}},
  };
  fx.config.space = ParameterSpace(specs, mechs);
  const double k_calc = 1.0, e0 = 1.0;
  fx.config.constants = json::object();
  fx.config.constants["k_calc"] = k_calc;
  fx.config.constants["e0"] = e0;

  const double sigma_star = 0.1;
  fx.theta_star.resize(10);
  fx.theta_star << 2.5, 0.45, 0.015, 1.0, 0.7, 0.55, 0.35, 0.007, 0.9, sigma_star;

  fx.condition_columns = {"X", "Pg", "R"};
  const double xs[] = {1.2, 2.0, 2.8, 3.6};
  const double pgr[][2] = {{0.5, 0.2}, {0.5, 2.5}, {3.5, 0.2}, {3.5, 2.5}};
  for (double x : xs)
    for (const auto& pr : pgr)
      fx.data.conditions.push_back({{{"X", x}, {"Pg", pr[0]}, {"R", pr[1]}}});

  ToyPolypModel model(fx.config.space, k_calc, e0);
  ModelEval truth = model.predict(fx.theta_star, fx.data.conditions);
  if (!truth.converged) throw StateError("toy-polyp fixture: truth point did not converge");
  fx.data.observed = noisy(truth.predictions, sigma_star, seed);

  Eigen::MatrixXd gn = oracle_gauss_newton(model, fx.theta_star, fx.data, sigma_star);
  fx.oracle["gauss_newton"] = matrix_to_json(gn);
  fx.oracle["theta_star"] =
      std::vector<double>(fx.theta_star.data(), fx.theta_star.data() + fx.theta_star.size());
  fx.oracle["sigma_star"] = sigma_star;
  fx.oracle["seed"] = seed;
  return fx;
}

}  // namespace

uint64_t fixture_default_seed(const std::string& name) {
  if (name == "linear-log") return 101;
  if (name == "exp-sum") return 202;
  if (name == "toy-polyp") return 303;
  throw KeyError("unknown fixture: " + name);
}

Fixture generate_fixture(const std::string& name, uint64_t seed) {
  if (name == "linear-log") return make_linear_log(seed);
  if (name == "exp-sum") return make_exp_sum(seed);
  if (name == "toy-polyp") return make_toy_polyp(seed);
  throw KeyError("unknown fixture: " + name);
}

void write_fixture(const Fixture& fx, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/config.json", config_json(fx.config.space, fx.config.constants));
  save_dataset_csv(fx.data, fx.condition_columns, dir + "/data.csv");
  write_file(dir + "/oracle.json", fx.oracle.dump(2) + "\n");
}

Eigen::MatrixXd oracle_gauss_newton(const Model& model, const Eigen::VectorXd& theta,
                                    const Dataset& data, double sigma) {
  const ParameterSpace& space = model.space();
  const auto& idx = space.model_indices();
  const int p = static_cast<int>(idx.size());
  const Eigen::Index nd = data.observed.size();
  const double h = 1e-6;

  Eigen::MatrixXd J(nd, p);
  for (int c = 0; c < p; ++c) {
    Eigen::VectorXd up = theta, dn = theta;
    up[idx[c]] *= std::exp(h);
    dn[idx[c]] *= std::exp(-h);
    ModelEval eu = model.predict(up, data.conditions);
    ModelEval ed = model.predict(dn, data.conditions);
    if (!eu.converged || !ed.converged)
      throw StencilError("oracle_gauss_newton: model failed at a Jacobian stencil point");
    J.col(c) = (eu.predictions - ed.predictions) / (2.0 * h);
  }
  return J.transpose() * J / (sigma * sigma);
}

}  // namespace sloppy
