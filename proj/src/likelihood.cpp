#include "sloppy/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "sloppy/errors.hpp"
#include "sloppy/optimize.hpp"
#include "sloppy/parallel.hpp"
#include "sloppy/rng.hpp"

namespace sloppy {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ln(sqrt(2 pi))
}  // namespace

LogLikelihoodValue log_likelihood(const Model& model, const Eigen::VectorXd& theta,
                                  const Dataset& data) {
  if (data.size() == 0) throw ShapeError("log_likelihood: empty dataset");
  const auto& space = model.space();
  const double sigma = theta[space.noise_index()];
  if (!(sigma > 0.0)) throw DomainError("log_likelihood: sigma must be positive");

  ModelEval eval = model.predict(theta, data.conditions);
  if (!eval.converged) return {kNegInf, false};
  if (eval.predictions.size() != data.observed.size())
    throw ShapeError("log_likelihood: prediction length != dataset size");

  const double n = static_cast<double>(data.size());
  const double ss = (eval.predictions - data.observed).squaredNorm();
  const double value = -n * (kHalfLog2Pi + std::log(sigma)) - ss / (2.0 * sigma * sigma);
  if (!std::isfinite(value)) return {kNegInf, false};
  return {value, true};
}

void loglik_sweep(const Model& model, const Dataset& data,
                  const std::vector<Eigen::VectorXd>& thetas, std::span<double> out) {
  if (out.size() != thetas.size()) throw ShapeError("loglik_sweep: output size mismatch");
  parallel_for(thetas.size(), [&](std::size_t i) {
    out[i] = log_likelihood(model, thetas[i], data).value;
  });
}

void loglik_sweep_serial(const Model& model, const Dataset& data,
                         const std::vector<Eigen::VectorXd>& thetas, std::span<double> out) {
  if (out.size() != thetas.size()) throw ShapeError("loglik_sweep: output size mismatch");
  serial_for(thetas.size(), [&](std::size_t i) {
    out[i] = log_likelihood(model, thetas[i], data).value;
  });
}

namespace {

// Uniform prior draw in natural units, rejecting points where the model
// does not converge (the 1_c indicator).
Eigen::VectorXd draw_from_prior(const Model& model, const Dataset& data, Rng& rng,
                                int max_attempts = 1000) {
  const auto& space = model.space();
  Eigen::VectorXd theta(space.size());
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (std::size_t j = 0; j < space.size(); ++j) {
      const auto& s = space.spec(j);
      double u = rng.uniform_open();
      if (u >= 1.0) u = std::nextafter(1.0, 0.0);
      theta[j] = s.lower + (s.upper - s.lower) * u;
    }
    if (model.predict(theta, data.conditions).converged) return theta;
  }
  throw SamplerError("prior rejection: no converging draw in 1000 attempts");
}

}  // namespace

std::vector<MleResult> multi_start_mle(const Model& model, const Dataset& data,
                                       const MleConfig& config) {
  if (config.n_starts < 1) throw ConfigError("multi_start_mle: n_starts must be >= 1");
  const auto& space = model.space();

  auto objective = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd theta = logit_inverse(space, z);
    const LogLikelihoodValue ll = log_likelihood(model, theta, data);
    return ll.converged ? -ll.value : std::numeric_limits<double>::infinity();
  };

  std::vector<MleResult> results(config.n_starts);
  parallel_for(config.n_starts, [&](std::size_t i) {
    Rng rng = Rng::keyed({config.seed, rng_tag::mle_start, i});
    MleResult r;
    r.start_index = static_cast<int>(i);
    try {
      const Eigen::VectorXd start = draw_from_prior(model, data, rng);
      BfgsOptions opts;
      opts.max_iterations = config.max_iterations;
      opts.grad_tol = config.grad_tol;
      BfgsResult opt = bfgs_minimize(objective, logit_transform(space, start), opts);
      r.theta = logit_inverse(space, opt.x);
      r.loglik = -opt.value;
      r.optimizer_converged = opt.converged && std::isfinite(r.loglik);
    } catch (const SamplerError&) {
      r.optimizer_converged = false;
      r.loglik = kNegInf;
    }
    results[i] = std::move(r);
  });

  std::stable_sort(results.begin(), results.end(), [](const MleResult& a, const MleResult& b) {
    if (a.loglik != b.loglik) return a.loglik > b.loglik;
    return a.start_index < b.start_index;
  });

  int retained = 0;
  bool any_converged = false;
  for (auto& r : results) {
    if (r.optimizer_converged) {
      any_converged = true;
      if (retained < config.retain) {
        r.retained = true;
        ++retained;
      }
    }
  }
  if (!any_converged) throw OptimizationError("multi_start_mle: no start converged");
  return results;
}

}  // namespace sloppy
