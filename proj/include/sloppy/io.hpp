#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sloppy/dataset.hpp"
#include "sloppy/likelihood.hpp"
#include "sloppy/model.hpp"
#include "sloppy/reduction.hpp"
#include "sloppy/sloppiness.hpp"
#include "sloppy/smc.hpp"

namespace sloppy {

// Shortest exact decimal form of a double ("%.17g" trimmed); all CSV
// reals go through this so artifacts are byte-stable.
std::string fmt_double(double x);

uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string hash_file(const std::string& path);

struct ModelConfig {
  ParameterSpace space;
  nlohmann::json constants;
};

ModelConfig load_config(const std::string& path);
std::string config_json(const ParameterSpace& space, const nlohmann::json& constants);

// name in {linear-log, exp-sum, toy-polyp}; model-specific constants are
// read from config.constants (design matrix, k_calc, e0).
std::unique_ptr<Model> make_model(const std::string& name, const ModelConfig& config);

std::string dataset_csv(const Dataset& ds, const std::vector<std::string>& condition_columns);

std::string particles_csv(const ParticleSet& ps, const ParameterSpace& space);
nlohmann::json particles_sidecar(const ParticleSet& ps, const std::string& model_name,
                                 const std::string& data_hash);
ParticleSet load_particles(const std::string& csv_path, const std::string& sidecar_path,
                           const ParameterSpace& space);

std::string mle_json(const std::vector<MleResult>& results, const ParameterSpace& space);
std::vector<MleResult> load_mle_json(const std::string& path, const ParameterSpace& space);

std::string spectrum_csv(const SloppySpectrum& sp);
SloppySpectrum load_spectrum(const std::string& spectrum_csv_path,
                             const std::string& eigenvectors_csv_path);
std::string eigenvectors_csv(const SloppySpectrum& sp);
std::string eigenparams_text(const SloppySpectrum& sp);

std::string comparison_csv(const ComparisonReport& report);

}  // namespace sloppy
