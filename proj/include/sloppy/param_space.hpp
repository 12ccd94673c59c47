#pragma once

#include <Eigen/Core>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sloppy {

enum class ParamRole { model, noise };

struct ParameterSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  ParamRole role = ParamRole::model;
};

struct Mechanism {
  std::vector<std::string> params;  // model-role parameter names
  bool removable = true;
};

// Ordered parameter metadata plus the mechanism grouping.  Declaration
// order is the canonical index order everywhere (eigenvector rows, CSV
// columns).  Immutable after construction.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  ParameterSpace(std::vector<ParameterSpec> specs,
                 std::map<std::string, Mechanism> mechanisms);

  std::size_t size() const { return specs_.size(); }
  std::size_t n_model() const { return model_indices_.size(); }
  std::size_t noise_index() const { return noise_index_; }
  const std::vector<ParameterSpec>& specs() const { return specs_; }
  const ParameterSpec& spec(std::size_t i) const { return specs_[i]; }
  const std::map<std::string, Mechanism>& mechanisms() const { return mechanisms_; }

  std::size_t index_of(const std::string& name) const;
  bool has(const std::string& name) const;
  // Indices of model-role parameters, in declaration order.
  const std::vector<std::size_t>& model_indices() const { return model_indices_; }
  std::vector<std::string> model_names() const;

 private:
  std::vector<ParameterSpec> specs_;
  std::map<std::string, Mechanism> mechanisms_;
  std::vector<std::size_t> model_indices_;
  std::size_t noise_index_ = 0;
};

// phi_i = ln(theta_i), all entries (noise included; callers drop it via
// model_indices when building sensitivity matrices).
Eigen::VectorXd log_transform(const ParameterSpace& space, const Eigen::VectorXd& theta);

// Bounds-to-reals transform used for sampling and optimization,
// elementwise ln((x - l) / (u - x)), and its inverse.
Eigen::VectorXd logit_transform(const ParameterSpace& space, const Eigen::VectorXd& theta);
Eigen::VectorXd logit_inverse(const ParameterSpace& space, const Eigen::VectorXd& unbounded);

// Strict interior check; throws DomainError naming the first offender.
void check_in_bounds(const ParameterSpace& space, const Eigen::VectorXd& theta);

// Space with the dropped mechanisms' parameters removed (survivor order
// preserved, noise parameter retained).  Throws KeyError for unknown
// names, ConfigError when asked to drop a non-removable mechanism.
ParameterSpace remove_mechanisms(const ParameterSpace& space,
                                 const std::set<std::string>& drop);

}  // namespace sloppy
