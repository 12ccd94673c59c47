#include "sloppy/models_builtin.hpp"

#include <cmath>

#include "sloppy/errors.hpp"

namespace sloppy {

// ---------------------------------------------------------------- model A

LinearLogModel::LinearLogModel(ParameterSpace space, Eigen::MatrixXd design)
    : space_(std::move(space)), design_(std::move(design)) {
  if (design_.cols() != static_cast<Eigen::Index>(space_.n_model()))
    throw ShapeError("linear-log: design matrix columns != model parameter count");
}

ModelEval LinearLogModel::predict(const Eigen::VectorXd& theta,
                                  const std::vector<Condition>& conditions) const {
  if (theta.size() != static_cast<Eigen::Index>(space_.size()))
    throw ShapeError("linear-log: parameter vector length mismatch");
  if (static_cast<Eigen::Index>(conditions.size()) != design_.rows())
    throw ShapeError("linear-log: condition count != design matrix rows");
  Eigen::VectorXd phi(space_.n_model());
  std::size_t k = 0;
  for (std::size_t i : space_.model_indices()) {
    if (!(theta[i] > 0.0))
      throw DomainError("linear-log: parameter " + space_.spec(i).name + " must be positive");
    phi[k++] = std::log(theta[i]);
  }
  return {design_ * phi, true};
}

std::unique_ptr<Model> LinearLogModel::reduce(const std::set<std::string>& drop) const {
  ParameterSpace reduced = remove_mechanisms(space_, drop);
  // Keep the design columns of surviving model parameters.
  Eigen::MatrixXd design(design_.rows(), reduced.n_model());
  const auto old_names = space_.model_names();
  std::size_t col = 0;
  for (const auto& name : reduced.model_names()) {
    for (std::size_t j = 0; j < old_names.size(); ++j)
      if (old_names[j] == name) design.col(col) = design_.col(j);
    ++col;
  }
  return std::make_unique<LinearLogModel>(std::move(reduced), std::move(design));
}

std::unique_ptr<Model> LinearLogModel::clone() const {
  return std::make_unique<LinearLogModel>(space_, design_);
}

// ---------------------------------------------------------------- model B

ExpSumModel::ExpSumModel(ParameterSpace space) : space_(std::move(space)) {
  const std::pair<const char*, const char*> pairs[] = {{"a1", "r1"}, {"a2", "r2"}};
  for (const auto& [a, r] : pairs) {
    if (space_.has(a) != space_.has(r))
      throw ConfigError(std::string("exp-sum: parameters ") + a + "/" + r +
                        " must be present or absent together");
    if (space_.has(a)) terms_.push_back({space_.index_of(a), space_.index_of(r)});
  }
  if (terms_.empty()) throw ConfigError("exp-sum: no decay terms in space");
}

ModelEval ExpSumModel::predict(const Eigen::VectorXd& theta,
                               const std::vector<Condition>& conditions) const {
  if (theta.size() != static_cast<Eigen::Index>(space_.size()))
    throw ShapeError("exp-sum: parameter vector length mismatch");
  Eigen::VectorXd y(conditions.size());
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const double t = conditions[i].at("t");
    double v = 0.0;
    for (const auto& term : terms_)
      v += theta[term.amp_index] * std::exp(-theta[term.rate_index] * t);
    y[i] = v;
  }
  return {std::move(y), true};
}

std::unique_ptr<Model> ExpSumModel::reduce(const std::set<std::string>& drop) const {
  return std::make_unique<ExpSumModel>(remove_mechanisms(space_, drop));
}

std::unique_ptr<Model> ExpSumModel::clone() const {
  return std::make_unique<ExpSumModel>(space_);
}

// ---------------------------------------------------------------- model C

ToyPolypModel::ToyPolypModel(ParameterSpace space, double k_calc, double e0,
                             std::set<std::string> dropped)
    : space_(std::move(space)), k_calc_(k_calc), e0_(e0), dropped_(std::move(dropped)) {
  cache_indices();
}

void ToyPolypModel::cache_indices() {
  auto idx = [&](const char* name) -> std::optional<std::size_t> {
    return space_.has(name) ? std::optional(space_.index_of(name)) : std::nullopt;
  };
  i_s_ = idx("s");
  i_kpp_ = idx("k_pp");
  i_kco2_ = idx("k_co2");
  i_vmax1_ = idx("Vmax1");
  i_km1_ = idx("Km1");
  i_alpha_ = idx("alpha");
  i_beta_ = idx("beta");
  i_vmax2_ = idx("Vmax2");
  i_km2_ = idx("Km2");
  if (!i_s_) throw ConfigError("toy-polyp: seawater diffusion parameter s is required");
}

ModelEval ToyPolypModel::predict(const Eigen::VectorXd& theta,
                                 const std::vector<Condition>& conditions) const {
  if (theta.size() != static_cast<Eigen::Index>(space_.size()))
    throw ShapeError("toy-polyp: parameter vector length mismatch");

  const double s = theta[*i_s_];
  const double kpp = i_kpp_ ? theta[*i_kpp_] : 0.0;
  const double kco2 = i_kco2_ ? theta[*i_kco2_] : 0.0;
  const double k = kpp + kco2;
  const bool pump1 = i_vmax1_.has_value();
  const bool pump2 = i_vmax2_.has_value();
  const double vmax1 = pump1 ? theta[*i_vmax1_] : 0.0;
  const double km1 = pump1 ? theta[*i_km1_] : 1.0;
  const double alpha = pump1 ? theta[*i_alpha_] : 0.0;
  const double beta = pump1 ? theta[*i_beta_] : 0.0;
  const double vmax2 = pump2 ? theta[*i_vmax2_] : 0.0;
  const double km2 = pump2 ? theta[*i_km2_] : 1.0;

  ModelEval eval;
  eval.predictions.resize(conditions.size());
  eval.converged = true;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const double X = conditions[i].at("X");
    const double Pg = conditions[i].at("Pg");
    const double R = conditions[i].at("R");
    const double gain1 = vmax1 * (alpha * Pg + beta * R);

    auto flux = [&](const Eigen::VectorXd& state) {
      const double C = state[0], E = state[1];
      const double p1 = pump1 ? gain1 * C / (km1 + C) : 0.0;
      const double p2 = pump2 ? vmax2 * C / (km2 + C) : 0.0;
      const double g = k_calc_ * std::max(E - e0_, 0.0);
      Eigen::VectorXd f(2);
      f[0] = s * (X - C) + k * (E - C) - p1 - p2;
      f[1] = k * (C - E) + p1 + p2 - g;
      return f;
    };

    Eigen::VectorXd guess(2);
    guess << X, X;
    SteadyStateResult ss = steady_state(flux, guess);
    if (!ss.converged || ss.state[1] < 0.0) {
      eval.converged = false;
      eval.predictions.setZero();
      return eval;
    }
    eval.predictions[i] = k_calc_ * std::max(ss.state[1] - e0_, 0.0);
  }
  return eval;
}

std::unique_ptr<Model> ToyPolypModel::reduce(const std::set<std::string>& drop) const {
  std::set<std::string> all = dropped_;
  all.insert(drop.begin(), drop.end());
  return std::make_unique<ToyPolypModel>(remove_mechanisms(space_, drop), k_calc_, e0_,
                                         std::move(all));
}

std::unique_ptr<Model> ToyPolypModel::clone() const {
  return std::make_unique<ToyPolypModel>(space_, k_calc_, e0_, dropped_);
}

}  // namespace sloppy
