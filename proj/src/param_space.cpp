#include "sloppy/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sloppy/errors.hpp"

namespace sloppy {

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> specs,
                               std::map<std::string, Mechanism> mechanisms)
    : specs_(std::move(specs)), mechanisms_(std::move(mechanisms)) {
  std::set<std::string> seen;
  std::size_t noise_count = 0;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    if (!seen.insert(s.name).second)
      throw ConfigError("duplicate parameter name: " + s.name);
    if (!std::isfinite(s.lower) || !std::isfinite(s.upper) || !(s.lower < s.upper))
      throw ConfigError("parameter " + s.name + ": bounds must be finite with lower < upper");
    if (s.role == ParamRole::noise) {
      noise_index_ = i;
      ++noise_count;
    } else {
      model_indices_.push_back(i);
    }
  }
  if (noise_count != 1)
    throw ConfigError("a parameter space needs exactly one noise-role parameter, got " +
                      std::to_string(noise_count));

  // Mechanism sets must be disjoint subsets of the model-role names.
  std::set<std::string> claimed;
  for (const auto& [mname, mech] : mechanisms_) {
    for (const auto& pname : mech.params) {
      if (!seen.count(pname))
        throw KeyError("mechanism " + mname + " references unknown parameter " + pname);
      if (specs_[index_of(pname)].role != ParamRole::model)
        throw ConfigError("mechanism " + mname + " may not contain the noise parameter");
      if (!claimed.insert(pname).second)
        throw ConfigError("parameter " + pname + " belongs to more than one mechanism");
    }
  }
}

std::size_t ParameterSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return i;
  throw KeyError("unknown parameter: " + name);
}

bool ParameterSpace::has(const std::string& name) const {
  return std::any_of(specs_.begin(), specs_.end(),
                     [&](const ParameterSpec& s) { return s.name == name; });
}

std::vector<std::string> ParameterSpace::model_names() const {
  std::vector<std::string> out;
  out.reserve(model_indices_.size());
  for (std::size_t i : model_indices_) out.push_back(specs_[i].name);
  return out;
}

Eigen::VectorXd log_transform(const ParameterSpace& space, const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(space.size()))
    throw ShapeError("log_transform: vector length does not match space");
  Eigen::VectorXd phi(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0))
      throw DomainError("log_transform: parameter " + space.spec(i).name +
                        " is not strictly positive");
    phi[i] = std::log(theta[i]);
  }
  return phi;
}

Eigen::VectorXd logit_transform(const ParameterSpace& space, const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(space.size()))
    throw ShapeError("logit_transform: vector length does not match space");
  Eigen::VectorXd out(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const auto& s = space.spec(i);
    if (!(theta[i] > s.lower && theta[i] < s.upper))
      throw DomainError("logit_transform: parameter " + s.name + " is on or outside its bounds");
    out[i] = std::log((theta[i] - s.lower) / (s.upper - theta[i]));
  }
  return out;
}

Eigen::VectorXd logit_inverse(const ParameterSpace& space, const Eigen::VectorXd& unbounded) {
  if (unbounded.size() != static_cast<Eigen::Index>(space.size()))
    throw ShapeError("logit_inverse: vector length does not match space");
  Eigen::VectorXd out(unbounded.size());
  for (Eigen::Index i = 0; i < unbounded.size(); ++i) {
    const auto& s = space.spec(i);
    const double z = unbounded[i];
    // Evaluate with the sign split so large |z| cannot overflow.
    if (z >= 0.0) {
      const double e = std::exp(-z);
      out[i] = (s.lower * e + s.upper) / (1.0 + e);
    } else {
      const double e = std::exp(z);
      out[i] = (s.lower + s.upper * e) / (1.0 + e);
    }
  }
  return out;
}

void check_in_bounds(const ParameterSpace& space, const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(space.size()))
    throw ShapeError("check_in_bounds: vector length does not match space");
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const auto& s = space.spec(i);
    if (!(theta[i] > s.lower && theta[i] < s.upper))
      throw DomainError("parameter " + s.name + " is outside (" + std::to_string(s.lower) +
                        ", " + std::to_string(s.upper) + ")");
  }
}

ParameterSpace remove_mechanisms(const ParameterSpace& space,
                                 const std::set<std::string>& drop) {
  const auto& mechs = space.mechanisms();
  std::set<std::string> dropped_params;
  for (const auto& name : drop) {
    auto it = mechs.find(name);
    if (it == mechs.end()) throw KeyError("unknown mechanism: " + name);
    if (!it->second.removable)
      throw ConfigError("mechanism " + name + " is marked non-removable");
    for (const auto& p : it->second.params) dropped_params.insert(p);
  }

  std::vector<ParameterSpec> specs;
  for (const auto& s : space.specs())
    if (!dropped_params.count(s.name)) specs.push_back(s);

  std::map<std::string, Mechanism> mechanisms;
  for (const auto& [n, m] : mechs)
    if (!drop.count(n)) mechanisms.emplace(n, m);

  return ParameterSpace(std::move(specs), std::move(mechanisms));
}

}  // namespace sloppy
