#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "sloppy/dataset.hpp"
#include "sloppy/model.hpp"

namespace sloppy {

struct SmcConfig {
  int particles = 5000;
  uint64_t seed = 0;
  double ess_target_fraction = 0.5;  // next gamma chosen so ESS = fraction * M
  int max_move_rounds = 30;
  double target_cumulative_accept = 0.99;
};

// Weighted posterior sample in logit (unbounded) space with the annealing
// evidence accumulator.  Terminal sets (gamma = 1) carry equal weights.
struct ParticleSet {
  Eigen::MatrixXd particles;  // M x d, logit space
  Eigen::VectorXd weights;    // normalized
  Eigen::VectorXd logliks;    // log f(y|theta_m) at the current positions
  double gamma = 0.0;
  double log_evidence = 0.0;
  uint64_t seed = 0;
  std::vector<double> gamma_schedule;
  std::vector<int> move_rounds;

  bool terminal() const { return gamma >= 1.0; }
};

// Log-likelihood as a function of theta in natural units; returns -inf
// where the model fails to converge (the prior indicator).
using LogLikFn = std::function<double(const Eigen::VectorXd&)>;

// Adaptive likelihood-annealed SMC with systematic resampling and
// covariance-scaled random-walk move steps.  Deterministic given
// (space, fn, config) for any worker count.
ParticleSet run_smc_fn(const ParameterSpace& space, const LogLikFn& fn,
                       const SmcConfig& config);

ParticleSet run_smc(const Model& model, const Dataset& data, const SmcConfig& config);

// Particle positions mapped back to natural units (rows = particles).
Eigen::MatrixXd particles_natural(const ParticleSet& ps, const ParameterSpace& space);

struct MarginalSummary {
  std::string name;
  double q025 = 0.0, median = 0.0, q975 = 0.0;
  std::vector<double> bin_edges;   // 257 edges for 256 bins, natural units
  std::vector<double> bin_counts;  // weighted counts
};

// Per-parameter quantiles and 256-bin histograms in natural units.
// Throws StateError on a non-terminal particle set.
std::vector<MarginalSummary> marginal_summaries(const ParticleSet& ps,
                                                const ParameterSpace& space);

// exp(log_ev_a - log_ev_b); > 1 favors model a.
double bayes_factor(double log_ev_a, double log_ev_b);

// Weighted (or plain) quantile of a sample, linear interpolation.
double quantile(std::vector<double> values, double q);

}  // namespace sloppy
