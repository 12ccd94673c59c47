#include "sloppy/sloppiness.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sloppy/errors.hpp"
#include "sloppy/parallel.hpp"
#include "sloppy/param_space.hpp"
#include "sloppy/rng.hpp"

namespace sloppy {

namespace {

struct StencilPoint {
  Eigen::VectorXd x;
  int i, k;  // coordinates perturbed; k = -1 for axis points, both -1 at center
};

template <class ForEach>
Eigen::MatrixXd hessian_fd_impl(const ScalarFn& fn, const Eigen::VectorXd& c,
                                double delta, ForEach&& for_each) {
  if (delta <= 0.0) throw DomainError("hessian_fd: delta must be positive");
  const int d = static_cast<int>(c.size());

  std::vector<StencilPoint> pts;
  pts.push_back({c, -1, -1});
  for (int i = 0; i < d; ++i)
    for (double s : {delta, -delta}) {
      Eigen::VectorXd x = c;
      x[i] += s;
      pts.push_back({std::move(x), i, -1});
    }
  for (int i = 0; i < d; ++i)
    for (int k = i + 1; k < d; ++k)
      for (double si : {delta, -delta})
        for (double sk : {delta, -delta}) {
          Eigen::VectorXd x = c;
          x[i] += si;
          x[k] += sk;
          pts.push_back({std::move(x), i, k});
        }

  std::vector<double> f(pts.size());
  for_each(pts.size(), [&](std::size_t p) { f[p] = fn(pts[p].x); });
  for (std::size_t p = 0; p < pts.size(); ++p)
    if (!std::isfinite(f[p]))
      throw StencilError("hessian_fd: non-finite value at stencil point, coordinates (" +
                         std::to_string(pts[p].i) + ", " + std::to_string(pts[p].k) + ")");

  Eigen::MatrixXd H(d, d);
  const double f0 = f[0];
  std::size_t p = 1;
  for (int i = 0; i < d; ++i) {
    double fp = f[p++], fm = f[p++];
    H(i, i) = (fp + fm - 2.0 * f0) / (delta * delta);
  }
  for (int i = 0; i < d; ++i)
    for (int k = i + 1; k < d; ++k) {
      double fpp = f[p++], fpm = f[p++], fmp = f[p++], fmm = f[p++];
      double v = (fpp - fpm - fmp + fmm) / (4.0 * delta * delta);
      H(i, k) = v;
      H(k, i) = v;
    }
  return 0.5 * (H + H.transpose());
}

// Eigenvalues of a symmetric matrix, descending.
void sym_eig(const Eigen::MatrixXd& S, Eigen::VectorXd& vals, Eigen::MatrixXd& vecs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw SpectrumError("eigendecomposition failed to converge");
  const Eigen::Index n = S.rows();
  vals.resize(n);
  vecs.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    vals[j] = es.eigenvalues()[n - 1 - j];
    vecs.col(j) = es.eigenvectors().col(n - 1 - j);
  }
}

bool has_negative_eigenvalue(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  return lo < -1e-10 * std::max(hi, 0.0) && lo < 0.0;
}

}  // namespace

Eigen::MatrixXd hessian_fd(const ScalarFn& fn, const Eigen::VectorXd& center, double delta) {
  return hessian_fd_impl(fn, center, delta,
                         [](std::size_t n, auto&& body) { parallel_for(n, body); });
}

Eigen::MatrixXd hessian_fd_serial(const ScalarFn& fn, const Eigen::VectorXd& center,
                                  double delta) {
  return hessian_fd_impl(fn, center, delta,
                         [](std::size_t n, auto&& body) { serial_for(n, body); });
}

ScalarFn loglik_of_log_params(const Model& model, const Dataset& data, double sigma) {
  const ParameterSpace& space = model.space();
  auto model_idx = space.model_indices();
  auto noise = space.noise_index();
  auto n = space.size();
  return [&model, &data, sigma, model_idx, noise, n](const Eigen::VectorXd& phi) {
    Eigen::VectorXd theta(n);
    theta[noise] = sigma;
    for (std::size_t i = 0; i < model_idx.size(); ++i)
      theta[model_idx[i]] = std::exp(phi[i]);
    return log_likelihood(model, theta, data).value;
  };
}

SensitivityMatrix matrix_hessian_mle(const Model& model, const Dataset& data,
                                     const MleResult& mle, double delta) {
  if (!mle.optimizer_converged || !mle.retained)
    throw StateError("matrix_hessian_mle: MLE result is not a retained converged optimum");
  const ParameterSpace& space = model.space();
  double sigma = mle.theta[space.noise_index()];
  Eigen::VectorXd phi(space.n_model());
  for (std::size_t i = 0; i < space.n_model(); ++i)
    phi[i] = std::log(mle.theta[space.model_indices()[i]]);

  SensitivityMatrix out;
  out.kind = MatrixKind::hessian_mle;
  out.param_names = space.model_names();
  out.entries = -hessian_fd(loglik_of_log_params(model, data, sigma), phi, delta);
  if (has_negative_eigenvalue(out.entries)) out.warnings.push_back("negative_eigenvalues");
  return out;
}

SensitivityMatrix matrix_posterior_cov(const ParticleSet& ps, const ParameterSpace& space) {
  if (!ps.terminal()) throw StateError("matrix_posterior_cov: particle set not at gamma = 1");
  const Eigen::Index M = ps.particles.rows();
  const auto& idx = space.model_indices();
  const Eigen::Index p = static_cast<Eigen::Index>(idx.size());
  if (M < p + 2) throw ShapeError("matrix_posterior_cov: too few particles");

  Eigen::MatrixXd nat = particles_natural(ps, space);
  Eigen::MatrixXd phi(M, p);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index i = 0; i < p; ++i) phi(m, i) = std::log(nat(m, idx[i]));

  Eigen::RowVectorXd mean = phi.colwise().mean();
  Eigen::MatrixXd centered = phi.rowwise() - mean;
  Eigen::MatrixXd sigma = (centered.adjoint() * centered) / (M - 1);

  SensitivityMatrix out;
  out.kind = MatrixKind::posterior_cov;
  out.param_names = space.model_names();

  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  sym_eig(sigma, vals, vecs);
  double vmax = vals.cwiseAbs().maxCoeff();
  double vmin = vals.cwiseAbs().minCoeff();
  bool rank_deficient = vmin <= 0.0 || vmax / vmin > 1e12;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (vals[j] > vmax * 1e-12) inv[j] = 1.0 / vals[j];
  out.entries = vecs * inv.asDiagonal() * vecs.transpose();
  out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();
  if (rank_deficient) out.warnings.push_back("rank_deficient");
  return out;
}

SensitivityMatrix matrix_lis(const Model& model, const Dataset& data,
                             const ParticleSet& ps, const LisConfig& config) {
  if (!ps.terminal()) throw StateError("matrix_lis: particle set not at gamma = 1");
  const ParameterSpace& space = model.space();
  const auto& idx = space.model_indices();
  const int p = static_cast<int>(idx.size());
  const int M = static_cast<int>(ps.particles.rows());

  // Empirical prior covariance of phi from accepted (converging) draws.
  Eigen::MatrixXd draws(config.prior_draws, p);
  std::vector<uint8_t> ok(config.prior_draws, 0);
  parallel_for(static_cast<std::size_t>(config.prior_draws), [&](std::size_t i) {
    Rng rng = Rng::keyed({config.seed, rng_tag::prior_omega, static_cast<uint64_t>(i)});
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Eigen::VectorXd theta(space.size());
      for (std::size_t c = 0; c < space.size(); ++c) {
        const auto& s = space.spec(c);
        theta[c] = s.lower + (s.upper - s.lower) * rng.uniform_open();
      }
      if (std::isfinite(log_likelihood(model, theta, data).value)) {
        for (int c = 0; c < p; ++c) draws(i, c) = std::log(theta[idx[c]]);
        ok[i] = 1;
        return;
      }
    }
  });
  for (int i = 0; i < config.prior_draws; ++i)
    if (!ok[i]) throw PriorCovError("matrix_lis: prior draw failed to find a converging point");

  Eigen::RowVectorXd mean = draws.colwise().mean();
  Eigen::MatrixXd centered = draws.rowwise() - mean;
  Eigen::MatrixXd omega = (centered.adjoint() * centered) / (config.prior_draws - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw PriorCovError("matrix_lis: prior covariance is not positive definite");
  Eigen::MatrixXd L = llt.matrixL();

  // Stratified subsample of particle indices.
  const int K = std::min(M, config.max_hessians);
  std::vector<int> chosen(K);
  for (int k = 0; k < K; ++k) {
    int lo = static_cast<int>(static_cast<long long>(k) * M / K);
    int hi = static_cast<int>(static_cast<long long>(k + 1) * M / K);
    Rng rng = Rng::keyed({config.seed, rng_tag::lis_subsample, static_cast<uint64_t>(k)});
    chosen[k] = lo + static_cast<int>(rng.uniform() * (hi - lo));
  }

  Eigen::MatrixXd nat = particles_natural(ps, space);
  std::vector<Eigen::MatrixXd> hess(K);
  std::vector<uint8_t> used(K, 0);
  parallel_for(static_cast<std::size_t>(K), [&](std::size_t k) {
    Eigen::VectorXd theta = nat.row(chosen[k]).transpose();
    double sigma = theta[space.noise_index()];
    Eigen::VectorXd phi(p);
    for (int i = 0; i < p; ++i) phi[i] = std::log(theta[idx[i]]);
    try {
      hess[k] = hessian_fd_serial(loglik_of_log_params(model, data, sigma), phi,
                                  config.delta);
      used[k] = 1;
    } catch (const StencilError&) {
      // Particle sits next to a non-converging region; drop it from the
      // average and record the skip.
    }
  });

  SensitivityMatrix out;
  out.kind = MatrixKind::lis;
  out.param_names = space.model_names();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  int n_used = 0;
  for (int k = 0; k < K; ++k)
    if (used[k]) {
      sum += L.transpose() * (-hess[k]) * L;
      ++n_used;
    }
  if (n_used == 0) throw StencilError("matrix_lis: every subsampled Hessian failed");
  if (n_used < K) out.warnings.push_back("skipped_stencils");
  out.subsample_size = n_used;
  out.entries = sum / n_used;
  out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();

  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  sym_eig(out.entries, vals, vecs);
  if (vals.minCoeff() < -1e-10 * vals.maxCoeff()) {
    Eigen::VectorXd clipped = vals.cwiseMax(0.0);
    out.entries = vecs * clipped.asDiagonal() * vecs.transpose();
    out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();
    out.warnings.push_back("clipped_negative_eigenvalues");
  }
  return out;
}

std::string render_eigenparam(const std::vector<std::string>& names,
                              const Eigen::VectorXd& v, double trunc) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::fabs(v[i]) < trunc) continue;
    if (!out.empty()) out += " * ";
    out += names[i];
    if (std::fabs(v[i] - 1.0) >= 5e-3) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "^%.2f", v[i]);
      out += buf;
    }
  }
  if (out.empty()) out = "1";
  return out;
}

SloppySpectrum analyze(const SensitivityMatrix& matrix) {
  const Eigen::MatrixXd& S = matrix.entries;
  if (S.rows() != S.cols()) throw ShapeError("analyze: matrix is not square");
  double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ShapeError("analyze: matrix is not symmetric");

  SloppySpectrum sp;
  sp.param_names = matrix.param_names;
  sym_eig(S, sp.eigenvalues, sp.eigenvectors);
  if (sp.eigenvalues[0] <= 0.0) {
    std::string list;
    for (Eigen::Index j = 0; j < sp.eigenvalues.size(); ++j)
      list += (j ? ", " : "") + std::to_string(sp.eigenvalues[j]);
    throw SpectrumError("analyze: leading eigenvalue is not positive; spectrum: " + list);
  }
  sp.rescaled = sp.eigenvalues / sp.eigenvalues[0];

  // Renormalize: divide by the signed largest-magnitude entry, so that
  // entry becomes exactly +1 (ties go to the lowest index).
  for (Eigen::Index j = 0; j < sp.eigenvectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < sp.eigenvectors.rows(); ++i) {
      double a = std::fabs(sp.eigenvectors(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    sp.eigenvectors.col(j) /= sp.eigenvectors(arg, j);
    sp.eigenvectors(arg, j) = 1.0;
  }
  for (Eigen::Index j = 0; j < sp.eigenvectors.cols(); ++j)
    sp.eigenparams.push_back(render_eigenparam(sp.param_names, sp.eigenvectors.col(j)));
  return sp;
}

}  // namespace sloppy
