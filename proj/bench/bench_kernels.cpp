// Timing comparison of the parallel kernels against their serial
// references, plus a byte-identity check of the outputs.

#include <chrono>
#include <cstdio>
#include <vector>

#include "sloppy/fixtures.hpp"
#include "sloppy/io.hpp"
#include "sloppy/likelihood.hpp"
#include "sloppy/models_builtin.hpp"
#include "sloppy/rng.hpp"
#include "sloppy/sloppiness.hpp"

using namespace sloppy;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clock_type::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  return best;
}

}  // namespace

int main() {
  Fixture fx = generate_fixture("toy-polyp", fixture_default_seed("toy-polyp"));
  auto model = make_model("toy-polyp", fx.config);
  const auto& space = fx.config.space;

  const std::size_t n = 20000;
  std::vector<Eigen::VectorXd> thetas;
  thetas.reserve(n);
  Rng rng = Rng::keyed({99});
  for (std::size_t m = 0; m < n; ++m) {
    Eigen::VectorXd theta(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
      const auto& ps = space.spec(i);
      theta[i] = ps.lower + rng.uniform() * (ps.upper - ps.lower);
    }
    thetas.push_back(theta);
  }

  std::vector<double> out_par(n), out_ser(n);
  double t_ser = time_best_of(3, [&] {
    loglik_sweep_serial(*model, fx.data, thetas, out_ser);
  });
  double t_par = time_best_of(3, [&] {
    loglik_sweep(*model, fx.data, thetas, out_par);
  });
  bool sweep_match = out_par == out_ser;
  std::printf("loglik_sweep    n=%zu  serial %8.3f ms  parallel %8.3f ms  "
              "speedup %5.2fx  identical %s\n",
              n, t_ser * 1e3, t_par * 1e3, t_ser / t_par, sweep_match ? "yes" : "NO");

  Eigen::VectorXd phi_full = log_transform(space, fx.theta_star);
  Eigen::VectorXd phi(space.n_model());
  for (std::size_t i = 0; i < space.n_model(); ++i)
    phi[i] = phi_full[space.model_indices()[i]];
  auto fn = loglik_of_log_params(*model, fx.data, 0.05);
  Eigen::MatrixXd h_ser, h_par;
  double th_ser = time_best_of(3, [&] { h_ser = hessian_fd_serial(fn, phi); });
  double th_par = time_best_of(3, [&] { h_par = hessian_fd(fn, phi); });
  bool hess_match = h_par == h_ser;
  std::printf("hessian_fd      d=%td    serial %8.3f ms  parallel %8.3f ms  "
              "speedup %5.2fx  identical %s\n",
              phi.size(), th_ser * 1e3, th_par * 1e3, th_ser / th_par,
              hess_match ? "yes" : "NO");

  return (sweep_match && hess_match) ? 0 : 1;
}
