#include "sloppy/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sloppy/errors.hpp"
#include "sloppy/parallel.hpp"
#include "sloppy/param_space.hpp"

namespace sloppy {

std::vector<MechanismScore> score_mechanisms(const SloppySpectrum& spectrum,
                                             const ParameterSpace& space, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("score_mechanisms: tau must be in (0, 1]");

  std::vector<int> stiff;
  for (Eigen::Index j = 0; j < spectrum.rescaled.size(); ++j)
    if (spectrum.rescaled[j] >= tau) stiff.push_back(static_cast<int>(j));

  // Row index of each model parameter within the spectrum.
  auto row_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < spectrum.param_names.size(); ++i)
      if (spectrum.param_names[i] == name) return static_cast<Eigen::Index>(i);
    throw KeyError("score_mechanisms: parameter '" + name + "' missing from spectrum");
  };

  std::vector<MechanismScore> out;
  for (const auto& [name, mech] : space.mechanisms()) {
    MechanismScore ms;
    ms.mechanism = name;
    ms.removable = mech.removable;
    ms.stiff_set = stiff;
    for (const auto& pname : mech.params) {
      Eigen::Index i = row_of(pname);
      for (int j : stiff) ms.score = std::max(ms.score, std::fabs(spectrum.eigenvectors(i, j)));
    }
    out.push_back(std::move(ms));
  }
  std::sort(out.begin(), out.end(), [](const MechanismScore& a, const MechanismScore& b) {
    return a.score != b.score ? a.score < b.score : a.mechanism < b.mechanism;
  });
  return out;
}

std::vector<std::set<std::string>> propose_candidates(
    const std::vector<MechanismScore>& scores, int max_drop, double threshold) {
  if (max_drop < 1) throw ConfigError("propose_candidates: max_drop must be >= 1");

  std::vector<std::string> eligible;
  for (const auto& s : scores)
    if (s.removable && s.score < threshold) eligible.push_back(s.mechanism);
  std::sort(eligible.begin(), eligible.end());

  std::vector<std::set<std::string>> out;
  const int n = static_cast<int>(eligible.size());
  for (int size = 1; size <= std::min(max_drop, n); ++size) {
    std::vector<int> pick(size);
    for (int i = 0; i < size; ++i) pick[i] = i;
    while (true) {
      std::set<std::string> subset;
      for (int i : pick) subset.insert(eligible[i]);
      out.push_back(std::move(subset));
      int i = size - 1;
      while (i >= 0 && pick[i] == n - size + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;
}

ReductionCandidate evaluate_candidate(const Model& original,
                                      const std::set<std::string>& drop,
                                      const Dataset& data, const EvaluateOptions& options) {
  ReductionCandidate cand;
  cand.dropped = drop;
  try {
    cand.model = std::shared_ptr<Model>(original.reduce(drop));
    const ParameterSpace& space = cand.model->space();
    cand.k = static_cast<int>(space.n_model()) + 1;

    cand.refit = run_smc(*cand.model, data, options.smc);
    cand.log_evidence = cand.refit.log_evidence;
    cand.bayes_factor_vs_original =
        bayes_factor(options.log_evidence_original, cand.log_evidence);

    Eigen::MatrixXd nat = particles_natural(cand.refit, space);
    const int M = static_cast<int>(nat.rows());
    const Eigen::Index nd = data.observed.size();

    // Per-datum posterior-median predictions and central 95% intervals
    // from per-particle model outputs.
    Eigen::MatrixXd preds(M, nd);
    std::vector<uint8_t> conv(M, 0);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t m) {
      ModelEval ev = cand.model->predict(nat.row(m).transpose(), data.conditions);
      if (ev.converged) {
        preds.row(m) = ev.predictions.transpose();
        conv[m] = 1;
      }
    });
    cand.predictive_intervals.resize(nd, 2);
    int covered = 0;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < nd; ++i) {
      std::vector<double> col;
      col.reserve(M);
      for (int m = 0; m < M; ++m)
        if (conv[m]) col.push_back(preds(m, i));
      if (col.empty()) throw SamplerError("evaluate_candidate: no converged predictions");
      double med = quantile(col, 0.5);
      ss += (med - data.observed[i]) * (med - data.observed[i]);
      cand.predictive_intervals(i, 0) = quantile(col, 0.025);
      cand.predictive_intervals(i, 1) = quantile(std::move(col), 0.975);
      if (data.observed[i] >= cand.predictive_intervals(i, 0) &&
          data.observed[i] <= cand.predictive_intervals(i, 1))
        ++covered;
    }
    cand.rmse = std::sqrt(ss / nd);
    cand.coverage = static_cast<double>(covered) / nd;

    auto mles = multi_start_mle(*cand.model, data, options.mle);
    cand.max_loglik = mles.front().loglik;
    cand.aic = 2.0 * cand.k - 2.0 * cand.max_loglik;
  } catch (const std::exception& e) {
    cand.failed = true;
    cand.failure = e.what();
  }
  return cand;
}

namespace {

ComparisonRow row_from(const ReductionCandidate& c, const std::string& label) {
  ComparisonRow r;
  r.label = label;
  r.n_params = c.k - 1;
  r.rmse = c.rmse;
  r.log_evidence = c.log_evidence;
  r.bayes_factor = c.bayes_factor_vs_original;
  r.coverage = c.coverage;
  r.aic = c.aic;
  r.failed = c.failed;
  return r;
}

std::string join_dropped(const std::set<std::string>& dropped) {
  if (dropped.empty()) return "-";
  std::string s;
  for (const auto& name : dropped) s += (s.empty() ? "" : "+") + name;
  return s;
}

}  // namespace

ComparisonReport compare_report(const ReductionCandidate& original,
                                const std::vector<ReductionCandidate>& candidates) {
  ComparisonReport rep;
  rep.rows.push_back(row_from(original, "-"));
  for (const auto& c : candidates) rep.rows.push_back(row_from(c, join_dropped(c.dropped)));
  return rep;
}

std::string render_comparison_text(const ComparisonReport& report) {
  std::size_t w = 7;
  for (const auto& r : report.rows) w = std::max(w, r.label.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %4s %12s %14s %12s %9s %12s %s\n",
                static_cast<int>(w), "dropped", "n_p", "rmse", "log_evidence", "bf", "cover",
                "aic", "status");
  out += buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-*s %4d %12.5g %14.6f %12.5g %9.3f %12.4f %s\n",
                  static_cast<int>(w), r.label.c_str(), r.n_params, r.rmse, r.log_evidence,
                  r.bayes_factor, r.coverage, r.aic, r.failed ? "failed" : "ok");
    out += buf;
  }
  return out;
}

}  // namespace sloppy
