#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>

#include "sloppy/errors.hpp"
#include "sloppy/fixtures.hpp"
#include "sloppy/io.hpp"

using namespace sloppy;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sloppy-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("fmt_double round-trips exactly and stays short") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -0.0, 2.0}) {
    CHECK(std::strtod(fmt_double(x).c_str(), nullptr) == x);
  }
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_double(2.0) == "2");
}

TEST_CASE("fnv1a64 known values") {
  CHECK(fnv1a64("") == 0xCBF29CE484222325ull);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8Cull);
  CHECK(fnv1a64_hex("").size() == 16);
}

TEST_CASE("config JSON round trip") {
  Fixture fx = generate_fixture("toy-polyp", 303);
  TempDir tmp;
  std::string path = (tmp.path / "config.json").string();
  write_file(path, config_json(fx.config.space, fx.config.constants));
  ModelConfig loaded = load_config(path);

  REQUIRE(loaded.space.size() == fx.config.space.size());
  for (std::size_t i = 0; i < loaded.space.size(); ++i) {
    CHECK(loaded.space.spec(i).name == fx.config.space.spec(i).name);
    CHECK(loaded.space.spec(i).lower == fx.config.space.spec(i).lower);
    CHECK(loaded.space.spec(i).upper == fx.config.space.spec(i).upper);
    CHECK(loaded.space.spec(i).role == fx.config.space.spec(i).role);
  }
  CHECK(loaded.space.mechanisms().size() == fx.config.space.mechanisms().size());
  CHECK_FALSE(loaded.space.mechanisms().at("seawater-diffusion").removable);
  CHECK(loaded.space.mechanisms().at("pump2").removable);
  CHECK(loaded.constants["k_calc"] == 1.0);

  // Serialization is idempotent byte-for-byte.
  CHECK(config_json(loaded.space, loaded.constants) == read_file(path));
}

TEST_CASE("dataset CSV round trip") {
  Fixture fx = generate_fixture("toy-polyp", 303);
  TempDir tmp;
  std::string path = (tmp.path / "data.csv").string();
  save_dataset_csv(fx.data, fx.condition_columns, path);
  Dataset loaded = load_dataset_csv(path);
  REQUIRE(loaded.size() == fx.data.size());
  for (std::size_t r = 0; r < loaded.size(); ++r) {
    CHECK(loaded.observed[r] == fx.data.observed[r]);
    for (const auto& col : fx.condition_columns)
      CHECK(loaded.conditions[r].at(col) == fx.data.conditions[r].at(col));
  }
}

TEST_CASE("particle CSV and sidecar round trip") {
  Fixture fx = generate_fixture("linear-log", 101);
  auto model = make_model("linear-log", fx.config);
  SmcConfig sc;
  sc.particles = 150;
  sc.seed = 5;
  ParticleSet ps = run_smc(*model, fx.data, sc);

  TempDir tmp;
  std::string csv = (tmp.path / "particles.csv").string();
  std::string side = (tmp.path / "particles.json").string();
  write_file(csv, particles_csv(ps, fx.config.space));
  write_file(side, particles_sidecar(ps, "linear-log", "deadbeef").dump(2) + "\n");

  ParticleSet loaded = load_particles(csv, side, fx.config.space);
  CHECK(loaded.log_evidence == ps.log_evidence);
  CHECK(loaded.seed == ps.seed);
  CHECK(loaded.gamma_schedule == ps.gamma_schedule);
  REQUIRE(loaded.particles.rows() == ps.particles.rows());
  // The CSV decimals round trip exactly; mapping them back through the
  // logit transform costs at most a final rounding per entry.
  Eigen::MatrixXd a = particles_natural(ps, fx.config.space);
  Eigen::MatrixXd b = particles_natural(loaded, fx.config.space);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("MLE JSON round trip") {
  Fixture fx = generate_fixture("linear-log", 101);
  auto model = make_model("linear-log", fx.config);
  MleConfig mc;
  mc.n_starts = 4;
  mc.retain = 2;
  mc.seed = 8;
  auto results = multi_start_mle(*model, fx.data, mc);

  TempDir tmp;
  std::string path = (tmp.path / "mle.json").string();
  write_file(path, mle_json(results, fx.config.space));
  auto loaded = load_mle_json(path, fx.config.space);
  REQUIRE(loaded.size() == results.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].loglik == results[i].loglik);
    CHECK(loaded[i].start_index == results[i].start_index);
    CHECK(loaded[i].retained == results[i].retained);
    CHECK((loaded[i].theta - results[i].theta).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("spectrum artifacts round trip") {
  SensitivityMatrix sm;
  sm.entries.resize(3, 3);
  sm.entries << 5.0, 1.0, 0.2, 1.0, 3.0, 0.1, 0.2, 0.1, 0.5;
  sm.param_names = {"a", "b", "c"};
  auto sp = analyze(sm);

  TempDir tmp;
  std::string s = (tmp.path / "spectrum.csv").string();
  std::string e = (tmp.path / "eigenvectors.csv").string();
  write_file(s, spectrum_csv(sp));
  write_file(e, eigenvectors_csv(sp));
  auto loaded = load_spectrum(s, e);
  CHECK((loaded.eigenvalues - sp.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.eigenvectors - sp.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.param_names == sp.param_names);
  CHECK(loaded.eigenparams == sp.eigenparams);

  std::string txt = eigenparams_text(sp);
  CHECK(txt.find("1.000000e+00") != std::string::npos);
}

TEST_CASE("dataset loader rejects malformed input") {
  TempDir tmp;
  std::string path = (tmp.path / "bad.csv").string();
  write_file(path, "a,b\n1,2\n");  // no observed column
  CHECK_THROWS_AS(load_dataset_csv(path), ConfigError);
  CHECK_THROWS_AS(load_dataset_csv((tmp.path / "missing.csv").string()), ConfigError);
}
