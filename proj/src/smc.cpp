#include "sloppy/smc.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sloppy/errors.hpp"
#include "sloppy/likelihood.hpp"
#include "sloppy/parallel.hpp"
#include "sloppy/param_space.hpp"
#include "sloppy/rng.hpp"

namespace sloppy {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const Eigen::VectorXd& x) {
  double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

// Log density of the logit image of a uniform prior on (l, u):
// standard logistic in each coordinate, u - 2 ln(1 + e^u).
double log_prior_logit(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double a = std::fabs(x[i]);
    s += -a - 2.0 * std::log1p(std::exp(-a));
  }
  return s;
}

// Effective sample size of weights proportional to exp(delta * ll).
double ess_at(const Eigen::VectorXd& ll, double delta) {
  Eigen::VectorXd lw = delta * ll;
  double l1 = logsumexp(lw);
  double l2 = logsumexp(2.0 * lw);
  return std::exp(2.0 * l1 - l2);
}

}  // namespace

ParticleSet run_smc_fn(const ParameterSpace& space, const LogLikFn& fn,
                       const SmcConfig& config) {
  if (config.particles < 2) throw ConfigError("smc: need at least 2 particles");
  const int M = config.particles;
  const int d = static_cast<int>(space.size());

  ParticleSet ps;
  ps.seed = config.seed;
  ps.particles.resize(M, d);
  ps.logliks.resize(M);
  ps.weights = Eigen::VectorXd::Constant(M, 1.0 / M);
  ps.gamma_schedule.push_back(0.0);

  // Prior draws with the convergence indicator: redraw until the model
  // evaluates.  Each particle owns its stream, so the parallel schedule
  // does not change the draws.
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t m) {
    Rng rng = Rng::keyed({config.seed, rng_tag::init_draw, static_cast<uint64_t>(m)});
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Eigen::VectorXd theta(d);
      for (int i = 0; i < d; ++i) {
        const auto& s = space.spec(i);
        theta[i] = s.lower + (s.upper - s.lower) * rng.uniform_open();
      }
      double ll = fn(theta);
      if (std::isfinite(ll)) {
        ps.particles.row(m) = logit_transform(space, theta).transpose();
        ps.logliks[m] = ll;
        return;
      }
    }
    ps.logliks[m] = kNegInf;
  });
  for (int m = 0; m < M; ++m)
    if (!std::isfinite(ps.logliks[m]))
      throw SamplerError("smc: prior draw failed to find a converging point");

  const double ess_target = config.ess_target_fraction * M;
  int t = 0;
  while (ps.gamma < 1.0) {
    // Temperature step by bisection on the incremental-weight ESS.
    double gamma_next = 1.0;
    if (ess_at(ps.logliks, 1.0 - ps.gamma) < ess_target) {
      double lo = ps.gamma, hi = 1.0;
      for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
        double mid = 0.5 * (lo + hi);
        (ess_at(ps.logliks, mid - ps.gamma) >= ess_target ? lo : hi) = mid;
      }
      gamma_next = lo;
      if (gamma_next <= ps.gamma)
        throw SamplerError("smc: annealing schedule failed to advance");
    }
    const double delta = gamma_next - ps.gamma;

    ps.log_evidence += logsumexp(delta * ps.logliks) - std::log(static_cast<double>(M));

    Eigen::VectorXd lw = delta * ps.logliks;
    lw.array() -= logsumexp(lw);
    Eigen::VectorXd w = lw.array().exp();

    // Systematic resampling on the normalized incremental weights.
    Rng rs = Rng::keyed({config.seed, rng_tag::resample, static_cast<uint64_t>(t)});
    double u0 = rs.uniform();
    Eigen::MatrixXd resampled(M, d);
    Eigen::VectorXd resampled_ll(M);
    {
      double cum = w[0];
      int j = 0;
      for (int m = 0; m < M; ++m) {
        double pos = (u0 + m) / M;
        while (pos > cum && j < M - 1) cum += w[++j];
        resampled.row(m) = ps.particles.row(j);
        resampled_ll[m] = ps.logliks[j];
      }
    }
    ps.particles = std::move(resampled);
    ps.logliks = std::move(resampled_ll);
    ps.gamma = gamma_next;

    // Random-walk proposal covariance from the resampled population.
    Eigen::RowVectorXd mean = ps.particles.colwise().mean();
    Eigen::MatrixXd centered = ps.particles.rowwise() - mean;
    Eigen::MatrixXd cov = (centered.adjoint() * centered) / (M - 1);
    const double scale = 2.38 * 2.38 / d;
    Eigen::MatrixXd prop = scale * cov;
    prop.diagonal().array() += 1e-12 + 1e-10 * prop.diagonal().maxCoeff();
    Eigen::LLT<Eigen::MatrixXd> llt(prop);
    if (llt.info() != Eigen::Success) {
      prop.diagonal().array() += 1e-8;
      llt.compute(prop);
      if (llt.info() != Eigen::Success)
        throw SamplerError("smc: proposal covariance is not positive definite");
    }
    Eigen::MatrixXd L = llt.matrixL();

    // One MH round per particle, then extend to R total rounds so that
    // the chance of at least one accepted move is 0.99, capped.
    std::vector<uint8_t> accepted(M);
    auto move_round = [&](int round) {
      parallel_for(static_cast<std::size_t>(M), [&](std::size_t m) {
        Rng rng = Rng::keyed({config.seed, rng_tag::move, static_cast<uint64_t>(t),
                              static_cast<uint64_t>(round), static_cast<uint64_t>(m)});
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z[i] = rng.gaussian();
        Eigen::VectorXd x = ps.particles.row(m).transpose();
        Eigen::VectorXd y = x + L * z;
        double ll_y = fn(logit_inverse(space, y));
        accepted[m] = 0;
        if (!std::isfinite(ll_y)) return;
        double log_alpha = ps.gamma * (ll_y - ps.logliks[m]) +
                           log_prior_logit(y) - log_prior_logit(x);
        if (std::log(rng.uniform_open()) < log_alpha) {
          ps.particles.row(m) = y.transpose();
          ps.logliks[m] = ll_y;
          accepted[m] = 1;
        }
      });
      int n = 0;
      for (int m = 0; m < M; ++m) n += accepted[m];
      return static_cast<double>(n) / M;
    };

    double abar = move_round(0);
    int rounds = config.max_move_rounds;
    if (abar >= 1.0) {
      rounds = 1;
    } else if (abar > 0.0) {
      double need = std::log(1.0 - config.target_cumulative_accept) / std::log(1.0 - abar);
      rounds = std::clamp(static_cast<int>(std::ceil(need)), 1, config.max_move_rounds);
    }
    for (int r = 1; r < rounds; ++r) move_round(r);

    ps.weights = Eigen::VectorXd::Constant(M, 1.0 / M);
    ps.gamma_schedule.push_back(gamma_next);
    ps.move_rounds.push_back(rounds);
    ++t;
    if (t > 10000) throw SamplerError("smc: schedule exceeded 10000 temperatures");
  }
  return ps;
}

ParticleSet run_smc(const Model& model, const Dataset& data, const SmcConfig& config) {
  LogLikFn fn = [&](const Eigen::VectorXd& theta) {
    return log_likelihood(model, theta, data).value;
  };
  return run_smc_fn(model.space(), fn, config);
}

Eigen::MatrixXd particles_natural(const ParticleSet& ps, const ParameterSpace& space) {
  Eigen::MatrixXd out(ps.particles.rows(), ps.particles.cols());
  for (Eigen::Index m = 0; m < ps.particles.rows(); ++m)
    out.row(m) = logit_inverse(space, ps.particles.row(m).transpose()).transpose();
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ShapeError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  double pos = q * (values.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::vector<MarginalSummary> marginal_summaries(const ParticleSet& ps,
                                                const ParameterSpace& space) {
  if (!ps.terminal()) throw StateError("marginal_summaries: particle set not at gamma = 1");
  Eigen::MatrixXd nat = particles_natural(ps, space);
  std::vector<MarginalSummary> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    MarginalSummary s;
    s.name = space.spec(i).name;
    std::vector<double> col(nat.rows());
    for (Eigen::Index m = 0; m < nat.rows(); ++m) col[m] = nat(m, i);
    s.q025 = quantile(col, 0.025);
    s.median = quantile(col, 0.5);
    s.q975 = quantile(col, 0.975);
    const int nbins = 256;
    double lo = space.spec(i).lower, hi = space.spec(i).upper;
    s.bin_edges.resize(nbins + 1);
    for (int b = 0; b <= nbins; ++b) s.bin_edges[b] = lo + (hi - lo) * b / nbins;
    s.bin_counts.assign(nbins, 0.0);
    for (Eigen::Index m = 0; m < nat.rows(); ++m) {
      int b = static_cast<int>((nat(m, i) - lo) / (hi - lo) * nbins);
      b = std::clamp(b, 0, nbins - 1);
      s.bin_counts[b] += ps.weights[m];
    }
    out.push_back(std::move(s));
  }
  return out;
}

double bayes_factor(double log_ev_a, double log_ev_b) {
  return std::exp(log_ev_a - log_ev_b);
}

}  // namespace sloppy
