#pragma once

#include <Eigen/Core>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sloppy/dataset.hpp"
#include "sloppy/likelihood.hpp"
#include "sloppy/model.hpp"
#include "sloppy/sloppiness.hpp"
#include "sloppy/smc.hpp"

namespace sloppy {

struct MechanismScore {
  std::string mechanism;
  double score = 0.0;
  std::vector<int> stiff_set;  // eigenparameter indices with lambda_j/lambda_1 >= tau
  bool removable = true;
};

// Insensitivity scores per mechanism, sorted ascending (most removable
// first, ties by name).  tau is the stiff-set cutoff.
std::vector<MechanismScore> score_mechanisms(const SloppySpectrum& spectrum,
                                             const ParameterSpace& space,
                                             double tau = 1e-2);

// All non-empty subsets (up to max_drop) of removable mechanisms whose
// every member scores below threshold, ordered by (size, lexicographic).
std::vector<std::set<std::string>> propose_candidates(
    const std::vector<MechanismScore>& scores, int max_drop, double threshold = 0.3);

struct ReductionCandidate {
  std::set<std::string> dropped;
  std::shared_ptr<Model> model;
  ParticleSet refit;
  double rmse = 0.0;
  double log_evidence = 0.0;
  double bayes_factor_vs_original = 1.0;  // > 1 favors the original
  Eigen::MatrixXd predictive_intervals;   // n_d x 2 central 95% bounds
  double coverage = 0.0;                  // fraction of data inside the interval
  double max_loglik = 0.0;
  int k = 0;  // surviving model parameters + 1 for sigma
  double aic = 0.0;
  bool failed = false;
  std::string failure;
};

struct EvaluateOptions {
  SmcConfig smc;
  MleConfig mle;
  double log_evidence_original = 0.0;
};

// Drop mechanisms, recalibrate via SMC, summarize fit quality.  A sampler
// or optimizer failure marks the candidate failed instead of throwing.
ReductionCandidate evaluate_candidate(const Model& original,
                                      const std::set<std::string>& drop,
                                      const Dataset& data, const EvaluateOptions& options);

struct ComparisonRow {
  std::string label;  // "-" for the original, else "+".join(dropped)
  int n_params = 0;   // model-role parameters
  double rmse = 0.0;
  double log_evidence = 0.0;
  double bayes_factor = 1.0;
  double coverage = 0.0;
  double aic = 0.0;
  bool failed = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // original first, then candidates in input order
};

ComparisonReport compare_report(const ReductionCandidate& original,
                                const std::vector<ReductionCandidate>& candidates);

std::string render_comparison_text(const ComparisonReport& report);

}  // namespace sloppy
