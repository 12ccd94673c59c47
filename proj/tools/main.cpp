#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sloppy/errors.hpp"
#include "sloppy/fixtures.hpp"
#include "sloppy/io.hpp"
#include "sloppy/models_builtin.hpp"
#include "sloppy/param_space.hpp"
#include "sloppy/reduction.hpp"
#include "sloppy/sloppiness.hpp"
#include "sloppy/smc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sloppy;

namespace {

constexpr const char* kToolVersion = "sloppy-reduce 1.0.0";

int dispatch(const std::vector<std::string>& args);

std::string default_run_id(const std::vector<std::string>& args, const std::string& extra) {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm);
  std::string material = extra;
  for (const auto& a : args) material += "\x1f" + a;
  return std::string(stamp) + "-" + fnv1a64_hex(material).substr(0, 8);
}

json load_manifest(const std::string& run_dir) {
  return json::parse(read_file(run_dir + "/manifest.json"));
}

void write_manifest(const std::string& dir, json manifest) {
  manifest["tool_version"] = kToolVersion;
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

struct RunInputs {
  ModelConfig config;
  Dataset data;
  std::unique_ptr<Model> model;
  std::string data_hash;
};

RunInputs load_run_inputs(const std::string& run_dir, const json& manifest) {
  RunInputs in;
  in.config = load_config(run_dir + "/config.json");
  in.data = load_dataset_csv(run_dir + "/data.csv");
  in.model = make_model(manifest.at("model").get<std::string>(), in.config);
  in.data_hash = hash_file(run_dir + "/data.csv");
  return in;
}

int cmd_fixture(const std::string& name, int64_t seed, const std::string& out) {
  uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : fixture_default_seed(name);
  Fixture fx = generate_fixture(name, s);
  write_fixture(fx, out + "/" + name);
  std::cout << "wrote fixture " << name << " (seed " << s << ") under " << out << "/" << name
            << "\n";
  return 0;
}

int cmd_calibrate(const std::vector<std::string>& argv, const std::string& model_name,
                  const std::string& config_path, const std::string& data_path,
                  const std::string& method, int particles, int starts, uint64_t seed,
                  const std::string& out, std::string run_id) {
  // Read every input before creating the run directory, so a bad input
  // leaves no partial artifacts behind.
  std::string config_bytes = read_file(config_path);
  std::string data_bytes = read_file(data_path);
  ModelConfig config = load_config(config_path);
  Dataset data = load_dataset_csv(data_path);
  std::unique_ptr<Model> model = make_model(model_name, config);
  std::string data_hash = fnv1a64_hex(data_bytes);

  if (run_id.empty()) run_id = default_run_id(argv, data_hash);
  std::string run_dir = out + "/" + run_id;
  fs::create_directories(run_dir);
  write_file(run_dir + "/config.json", config_bytes);
  write_file(run_dir + "/data.csv", data_bytes);

  json manifest;
  manifest["run_id"] = run_id;
  manifest["command"] = argv;
  manifest["model"] = model_name;
  manifest["data_path"] = data_path;
  manifest["data_hash"] = data_hash;
  manifest["seed"] = seed;
  manifest["method"] = method;
  std::vector<std::string> artifacts = {"config.json", "data.csv"};

  if (method == "mle") {
    MleConfig mc;
    mc.n_starts = starts;
    mc.seed = seed;
    auto results = multi_start_mle(*model, data, mc);
    write_file(run_dir + "/mle.json", mle_json(results, config.space));
    manifest["M"] = starts;
    artifacts.push_back("mle.json");
  } else if (method == "smc") {
    SmcConfig sc;
    sc.particles = particles;
    sc.seed = seed;
    ParticleSet ps = run_smc(*model, data, sc);
    write_file(run_dir + "/particles.csv", particles_csv(ps, config.space));
    write_file(run_dir + "/particles.json",
               particles_sidecar(ps, model_name, data_hash).dump(2) + "\n");
    manifest["M"] = particles;
    artifacts.push_back("particles.csv");
    artifacts.push_back("particles.json");
  } else {
    throw ConfigError("calibrate: unknown method '" + method + "'");
  }
  manifest["artifacts"] = artifacts;
  write_manifest(run_dir, manifest);
  std::cout << "run " << run_id << " written under " << run_dir << "\n";
  return 0;
}

int cmd_sloppy(const std::vector<std::string>& argv, const std::string& run_dir,
               const std::string& matrix, double delta, std::string out) {
  json manifest = load_manifest(run_dir);
  RunInputs in = load_run_inputs(run_dir, manifest);
  std::string method = manifest.at("method").get<std::string>();

  SensitivityMatrix sm;
  if (matrix == "hessian") {
    if (method != "mle")
      throw ConfigError("sloppy --matrix hessian needs an MLE run, got method '" + method +
                        "'");
    auto mles = load_mle_json(run_dir + "/mle.json", in.config.space);
    // The top slot may be a non-converged point tied on a flat ridge;
    // the sensitivity matrix wants the best retained optimum.
    auto best = std::find_if(mles.begin(), mles.end(),
                             [](const MleResult& r) { return r.retained; });
    if (best == mles.end())
      throw StateError("sloppy --matrix hessian: run has no retained MLE result");
    sm = matrix_hessian_mle(*in.model, in.data, *best, delta);
  } else if (matrix == "postcov" || matrix == "lis") {
    if (method != "smc")
      throw ConfigError("sloppy --matrix " + matrix + " needs an SMC run, got method '" +
                        method + "'");
    ParticleSet ps =
        load_particles(run_dir + "/particles.csv", run_dir + "/particles.json", in.config.space);
    if (matrix == "postcov") {
      sm = matrix_posterior_cov(ps, in.config.space);
    } else {
      LisConfig lc;
      lc.delta = delta;
      lc.seed = manifest.at("seed").get<uint64_t>();
      sm = matrix_lis(*in.model, in.data, ps, lc);
    }
  } else {
    throw ConfigError("sloppy: unknown matrix '" + matrix + "'");
  }
  for (const auto& w : sm.warnings) std::cerr << "warning: " << w << "\n";

  SloppySpectrum sp = analyze(sm);
  if (out.empty()) out = run_dir + "/sloppy-" + matrix;
  fs::create_directories(out);
  write_file(out + "/spectrum.csv", spectrum_csv(sp));
  write_file(out + "/eigenvectors.csv", eigenvectors_csv(sp));
  write_file(out + "/eigenparams.txt", eigenparams_text(sp));

  json m;
  m["parent_run_id"] = manifest.at("run_id");
  m["command"] = argv;
  m["matrix"] = matrix;
  m["delta"] = delta;
  m["data_hash"] = manifest.at("data_hash");
  m["warnings"] = sm.warnings;
  m["artifacts"] = {"spectrum.csv", "eigenvectors.csv", "eigenparams.txt"};
  write_manifest(out, m);
  std::cout << "spectrum written under " << out << "\n";
  return 0;
}

int cmd_reduce(const std::vector<std::string>& argv, const std::string& run_dir, double tau,
               double threshold, int max_drop, std::vector<std::string> force_drop,
               std::vector<std::string> keep, int64_t seed_opt, int particles_opt, int starts,
               bool i_know) {
  json manifest = load_manifest(run_dir);
  if (manifest.at("method").get<std::string>() != "smc")
    throw ConfigError("reduce needs an SMC calibration run (for the evidence baseline)");
  RunInputs in = load_run_inputs(run_dir, manifest);

  std::string sloppy_dir;
  for (const char* cand : {"sloppy-hessian", "sloppy-postcov", "sloppy-lis"})
    if (fs::exists(run_dir + "/" + cand + "/spectrum.csv")) {
      sloppy_dir = run_dir + "/" + cand;
      break;
    }
  if (sloppy_dir.empty())
    throw ConfigError("reduce: no sloppy analysis artifacts under " + run_dir +
                      "; run the sloppy subcommand first");
  SloppySpectrum sp =
      load_spectrum(sloppy_dir + "/spectrum.csv", sloppy_dir + "/eigenvectors.csv");

  auto scores = score_mechanisms(sp, in.config.space, tau);
  auto candidates = propose_candidates(scores, max_drop, threshold);

  for (const auto& k : keep) {
    if (!in.config.space.mechanisms().count(k)) throw KeyError("--keep: unknown mechanism " + k);
    std::erase_if(candidates,
                  [&](const std::set<std::string>& c) { return c.count(k) > 0; });
  }

  bool need_force_model = false;
  for (const auto& f : force_drop) {
    auto it = in.config.space.mechanisms().find(f);
    if (it == in.config.space.mechanisms().end())
      throw KeyError("--force-drop: unknown mechanism " + f);
    if (!it->second.removable) {
      if (!i_know)
        throw ConfigError("--force-drop " + f +
                          " targets a non-removable mechanism; pass --i-know to override");
      need_force_model = true;
    }
    std::set<std::string> single = {f};
    if (std::find(candidates.begin(), candidates.end(), single) == candidates.end())
      candidates.push_back(single);
  }

  // The override rebuilds the model over a space where every forced
  // mechanism is marked removable, so reduce() accepts it.
  std::unique_ptr<Model> base = std::move(in.model);
  if (need_force_model) {
    std::vector<ParameterSpec> specs = in.config.space.specs();
    std::map<std::string, Mechanism> mechs = in.config.space.mechanisms();
    for (const auto& f : force_drop) mechs[f].removable = true;
    ModelConfig forced;
    forced.space = ParameterSpace(specs, mechs);
    forced.constants = in.config.constants;
    base = make_model(manifest.at("model").get<std::string>(), forced);
  }

  EvaluateOptions opt;
  opt.smc.particles = particles_opt > 0 ? particles_opt : manifest.at("M").get<int>();
  opt.smc.seed = seed_opt >= 0 ? static_cast<uint64_t>(seed_opt)
                               : manifest.at("seed").get<uint64_t>();
  opt.mle.n_starts = starts;
  opt.mle.seed = opt.smc.seed;
  json side = json::parse(read_file(run_dir + "/particles.json"));
  opt.log_evidence_original = side.at("log_evidence").get<double>();

  std::string red_dir = run_dir + "/reduction";
  fs::create_directories(red_dir);

  auto label_of = [](const std::set<std::string>& drop) {
    std::string s;
    for (const auto& n : drop) s += (s.empty() ? "" : "+") + n;
    return s.empty() ? std::string("original") : s;
  };
  auto persist = [&](const ReductionCandidate& c) {
    std::string dir = red_dir + "/" + label_of(c.dropped);
    fs::create_directories(dir);
    if (!c.failed) {
      write_file(dir + "/particles.csv", particles_csv(c.refit, c.model->space()));
      write_file(dir + "/particles.json",
                 particles_sidecar(c.refit, c.model->name(),
                                   manifest.at("data_hash").get<std::string>())
                         .dump(2) +
                     "\n");
    } else {
      write_file(dir + "/failed.txt", c.failure + "\n");
    }
  };

  ReductionCandidate original = evaluate_candidate(*base, {}, in.data, opt);
  persist(original);
  std::vector<ReductionCandidate> evaluated;
  for (const auto& drop : candidates) {
    evaluated.push_back(evaluate_candidate(*base, drop, in.data, opt));
    persist(evaluated.back());
  }

  ComparisonReport report = compare_report(original, evaluated);
  write_file(red_dir + "/comparison.csv", comparison_csv(report));
  std::string text = render_comparison_text(report);
  write_file(red_dir + "/comparison.txt", text);

  json scores_json = json::array();
  for (const auto& s : scores)
    scores_json.push_back(
        {{"mechanism", s.mechanism}, {"score", s.score}, {"removable", s.removable}});
  write_file(red_dir + "/scores.json", scores_json.dump(2) + "\n");

  json m;
  m["parent_run_id"] = manifest.at("run_id");
  m["command"] = argv;
  m["data_hash"] = manifest.at("data_hash");
  m["seed"] = opt.smc.seed;
  m["M"] = opt.smc.particles;
  m["artifacts"] = {"comparison.csv", "comparison.txt", "scores.json"};
  write_manifest(red_dir, m);
  std::cout << text;
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& out) {
  std::string merged = "run,dropped,n_params,rmse,log_evidence,bayes_factor,coverage,aic,status\n";
  std::vector<json> manifests;
  for (const auto& run_dir : runs) {
    manifests.push_back(load_manifest(run_dir));
    if (manifests.back().at("data_hash") != manifests.front().at("data_hash"))
      throw ConfigError("compare: refusing to merge runs with different data hashes");
  }
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::string& run_dir = runs[r];
    std::string run_id = manifests[r].at("run_id").get<std::string>();
    std::istringstream in(read_file(run_dir + "/reduction/comparison.csv"));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line))
      if (!line.empty()) merged += run_id + "," + line + "\n";
  }
  if (!out.empty()) write_file(out, merged);
  std::cout << merged;
  return 0;
}

int cmd_rerun(const std::string& manifest_path) {
  json manifest = json::parse(read_file(manifest_path));
  std::vector<std::string> args = manifest.at("command").get<std::vector<std::string>>();
  if (args.empty()) throw ConfigError("rerun: manifest has an empty command");
  // Pin the original run id so calibrate reruns land in the same place.
  if (args[0] == "calibrate" &&
      std::find(args.begin(), args.end(), "--run-id") == args.end() &&
      manifest.contains("run_id")) {
    args.push_back("--run-id");
    args.push_back(manifest["run_id"].get<std::string>());
  }
  return dispatch(args);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Sloppiness-driven strategic model reduction"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // fixture
  auto* fix = app.add_subcommand("fixture", "Generate a benchmark fixture");
  std::string fix_name, fix_out = "fixtures";
  int64_t fix_seed = -1;
  fix->add_option("--name", fix_name, "linear-log | exp-sum | toy-polyp")->required();
  fix->add_option("--seed", fix_seed, "Generation seed (default: the committed seed)");
  fix->add_option("--out", fix_out, "Output directory root");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit a model by MLE or SMC");
  std::string cal_model, cal_config, cal_data, cal_method = "smc", cal_out = "runs",
              cal_run_id;
  int cal_particles = 5000, cal_starts = 100;
  uint64_t cal_seed = 0;
  cal->add_option("--model", cal_model, "linear-log | exp-sum | toy-polyp")->required();
  cal->add_option("--config", cal_config, "Model config JSON")->required();
  cal->add_option("--data", cal_data, "Dataset CSV")->required();
  cal->add_option("--method", cal_method, "mle | smc");
  cal->add_option("--particles", cal_particles, "SMC particle count");
  cal->add_option("--starts", cal_starts, "MLE start count");
  cal->add_option("--seed", cal_seed, "RNG seed");
  cal->add_option("--out", cal_out, "Runs directory root");
  cal->add_option("--run-id", cal_run_id, "Run id (default: timestamp+hash)");

  // sloppy
  auto* slo = app.add_subcommand("sloppy", "Sensitivity matrix and eigenparameters");
  std::string slo_run, slo_matrix = "postcov", slo_out;
  double slo_delta = 1e-2;
  slo->add_option("--run", slo_run, "Calibration run directory")->required();
  slo->add_option("--matrix", slo_matrix, "hessian | postcov | lis");
  slo->add_option("--delta", slo_delta, "Finite-difference step in log space");
  slo->add_option("--out", slo_out, "Output directory (default <run>/sloppy-<matrix>)");

  // reduce
  auto* red = app.add_subcommand("reduce", "Propose, refit and compare reduced models");
  std::string red_run;
  double red_tau = 1e-2, red_threshold = 0.3;
  int red_max_drop = 2, red_particles = -1, red_starts = 100;
  int64_t red_seed = -1;
  std::vector<std::string> red_force, red_keep;
  bool red_i_know = false;
  red->add_option("--run", red_run, "SMC calibration run directory")->required();
  red->add_option("--tau", red_tau, "Stiff-set eigenvalue cutoff");
  red->add_option("--threshold", red_threshold, "Mechanism removal score threshold");
  red->add_option("--max-drop", red_max_drop, "Largest candidate subset size");
  red->add_option("--force-drop", red_force, "Mechanism to drop regardless of score");
  red->add_option("--keep", red_keep, "Mechanism to exclude from all candidates");
  red->add_option("--seed", red_seed, "Refit seed (default: calibration seed)");
  red->add_option("--particles", red_particles, "Refit particle count (default: original M)");
  red->add_option("--starts", red_starts, "MLE starts for the AIC column");
  red->add_flag("--i-know", red_i_know, "Allow force-dropping a non-removable mechanism");

  // compare
  auto* cmp = app.add_subcommand("compare", "Merge comparison reports across runs");
  std::vector<std::string> cmp_runs;
  std::string cmp_out;
  cmp->add_option("--runs", cmp_runs, "Run directories with reduction reports")->required();
  cmp->add_option("--out", cmp_out, "Merged CSV path");

  // rerun
  auto* rer = app.add_subcommand("rerun", "Re-execute a command from its manifest");
  std::string rer_manifest;
  rer->add_option("--manifest", rer_manifest, "Path to manifest.json")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*fix) return cmd_fixture(fix_name, fix_seed, fix_out);
    if (*cal)
      return cmd_calibrate(args, cal_model, cal_config, cal_data, cal_method, cal_particles,
                           cal_starts, cal_seed, cal_out, cal_run_id);
    if (*slo) return cmd_sloppy(args, slo_run, slo_matrix, slo_delta, slo_out);
    if (*red)
      return cmd_reduce(args, red_run, red_tau, red_threshold, red_max_drop, red_force,
                        red_keep, red_seed, red_particles, red_starts, red_i_know);
    if (*cmp) return cmd_compare(cmp_runs, cmp_out);
    if (*rer) return cmd_rerun(rer_manifest);
  } catch (const OptimizationError& e) {
    std::cerr << "error (optimizer): " << e.what() << "\n";
    return 3;
  } catch (const SamplerError& e) {
    std::cerr << "error (sampler): " << e.what() << "\n";
    return 3;
  } catch (const StencilError& e) {
    std::cerr << "error (hessian stencil): " << e.what() << "\n";
    return 3;
  } catch (const PriorCovError& e) {
    std::cerr << "error (prior covariance): " << e.what() << "\n";
    return 3;
  } catch (const SpectrumError& e) {
    std::cerr << "error (spectrum): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args);
}
