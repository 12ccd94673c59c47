#pragma once

#include <Eigen/Core>
#include <optional>

#include "sloppy/model.hpp"

namespace sloppy {

// Built-in model A: y = A * ln(theta_model).  Analytic oracle model; the
// log-likelihood Hessian in phi is exactly -A^T A / sigma^2.
class LinearLogModel : public Model {
 public:
  // A has one row per dataset row and one column per model-role parameter
  // (in declaration order).
  LinearLogModel(ParameterSpace space, Eigen::MatrixXd design);

  const ParameterSpace& space() const override { return space_; }
  std::string name() const override { return "linear-log"; }
  ModelEval predict(const Eigen::VectorXd& theta,
                    const std::vector<Condition>& conditions) const override;
  std::unique_ptr<Model> reduce(const std::set<std::string>& drop) const override;
  std::unique_ptr<Model> clone() const override;

  const Eigen::MatrixXd& design() const { return design_; }

 private:
  ParameterSpace space_;
  Eigen::MatrixXd design_;
};

// Built-in model B: y(t) = a1 exp(-r1 t) + a2 exp(-r2 t), the canonical
// sloppy benchmark.  Terms whose parameters are absent from the space
// (after reduce) contribute nothing.
class ExpSumModel : public Model {
 public:
  explicit ExpSumModel(ParameterSpace space);

  const ParameterSpace& space() const override { return space_; }
  std::string name() const override { return "exp-sum"; }
  ModelEval predict(const Eigen::VectorXd& theta,
                    const std::vector<Condition>& conditions) const override;
  std::unique_ptr<Model> reduce(const std::set<std::string>& drop) const override;
  std::unique_ptr<Model> clone() const override;

 private:
  ParameterSpace space_;
  struct Term {
    std::size_t amp_index;
    std::size_t rate_index;
  };
  std::vector<Term> terms_;
};

// Built-in model C: two-compartment "toy polyp" solved at steady state.
//
//   dC/dt = s (X - C) + (k_pp + k_co2)(E - C) - P1 - P2
//   dE/dt = (k_pp + k_co2)(C - E) + P1 + P2 - G(E)
//   P1 = Vmax1 (alpha Pg + beta R) C / (Km1 + C)
//   P2 = Vmax2 C / (Km2 + C)
//   G(E) = k_calc * max(E - E0, 0)
//
// Output is G(E*) at the steady state; a solver failure or E* < 0 is
// reported as converged = false rather than an exception.
class ToyPolypModel : public Model {
 public:
  ToyPolypModel(ParameterSpace space, double k_calc, double e0,
                std::set<std::string> dropped = {});

  const ParameterSpace& space() const override { return space_; }
  std::string name() const override { return "toy-polyp"; }
  ModelEval predict(const Eigen::VectorXd& theta,
                    const std::vector<Condition>& conditions) const override;
  std::unique_ptr<Model> reduce(const std::set<std::string>& drop) const override;
  std::unique_ptr<Model> clone() const override;

  double k_calc() const { return k_calc_; }
  double e0() const { return e0_; }

 private:
  ParameterSpace space_;
  double k_calc_;
  double e0_;
  std::set<std::string> dropped_;
  // Cached indices; nullopt when the mechanism is dropped.
  std::optional<std::size_t> i_s_, i_kpp_, i_kco2_, i_vmax1_, i_km1_, i_alpha_,
      i_beta_, i_vmax2_, i_km2_;
  void cache_indices();
};

}  // namespace sloppy
