#include "sloppy/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "sloppy/errors.hpp"
#include "sloppy/models_builtin.hpp"
#include "sloppy/param_space.hpp"

namespace sloppy {

using nlohmann::json;

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  // Shorter forms that still round-trip keep the files readable.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[32];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, x);
    if (std::strtod(probe, nullptr) == x) return probe;
  }
  return buf;
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

std::string hash_file(const std::string& path) { return fnv1a64_hex(read_file(path)); }

ModelConfig load_config(const std::string& path) {
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  if (!cfg.contains("parameters") || !cfg["parameters"].is_array())
    throw ConfigError("config: missing 'parameters' array");

  std::vector<ParameterSpec> specs;
  for (const auto& p : cfg["parameters"]) {
    ParameterSpec s;
    s.name = p.at("name").get<std::string>();
    s.lower = p.at("lower").get<double>();
    s.upper = p.at("upper").get<double>();
    std::string role = p.value("role", "model");
    if (role == "model")
      s.role = ParamRole::model;
    else if (role == "noise")
      s.role = ParamRole::noise;
    else
      throw ConfigError("config: unknown role '" + role + "' for " + s.name);
    specs.push_back(std::move(s));
  }

  std::map<std::string, Mechanism> mechs;
  if (cfg.contains("mechanisms")) {
    const auto& m = cfg["mechanisms"];
    json removable = m.value("_removable", json::object());
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (it.key() == "_removable") continue;
      Mechanism mech;
      for (const auto& pname : it.value()) mech.params.push_back(pname.get<std::string>());
      mech.removable = removable.value(it.key(), true);
      mechs[it.key()] = std::move(mech);
    }
  }

  ModelConfig out;
  out.space = ParameterSpace(std::move(specs), std::move(mechs));
  out.constants = cfg.value("constants", json::object());
  return out;
}

std::string config_json(const ParameterSpace& space, const json& constants) {
  json cfg;
  cfg["parameters"] = json::array();
  for (const auto& s : space.specs())
    cfg["parameters"].push_back({{"name", s.name},
                                 {"lower", s.lower},
                                 {"upper", s.upper},
                                 {"role", s.role == ParamRole::noise ? "noise" : "model"}});
  json mechs = json::object();
  json removable = json::object();
  for (const auto& [name, mech] : space.mechanisms()) {
    mechs[name] = mech.params;
    removable[name] = mech.removable;
  }
  mechs["_removable"] = removable;
  cfg["mechanisms"] = mechs;
  cfg["constants"] = constants;
  return cfg.dump(2) + "\n";
}

std::unique_ptr<Model> make_model(const std::string& name, const ModelConfig& config) {
  if (name == "linear-log") {
    const auto& rows = config.constants.at("design");
    Eigen::MatrixXd A(rows.size(), config.space.n_model());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const auto& row = rows[r];
      if (row.size() != static_cast<std::size_t>(A.cols()))
        throw ConfigError("linear-log: design row width != model parameter count");
      for (Eigen::Index c = 0; c < A.cols(); ++c) A(r, c) = row[c].get<double>();
    }
    return std::make_unique<LinearLogModel>(config.space, std::move(A));
  }
  if (name == "exp-sum") return std::make_unique<ExpSumModel>(config.space);
  if (name == "toy-polyp")
    return std::make_unique<ToyPolypModel>(config.space,
                                           config.constants.at("k_calc").get<double>(),
                                           config.constants.at("e0").get<double>());
  throw KeyError("unknown model: " + name);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset: empty file " + path);
  auto header = split_csv_line(line);
  if (header.empty() || header.back() != "observed")
    throw ConfigError("dataset: last column must be 'observed' in " + path);

  Dataset ds;
  std::vector<double> obs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError("dataset: row width mismatch in " + path);
    Condition c;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i)
      c.inputs[header[i]] = std::strtod(cells[i].c_str(), nullptr);
    ds.conditions.push_back(std::move(c));
    obs.push_back(std::strtod(cells.back().c_str(), nullptr));
  }
  ds.observed = Eigen::Map<Eigen::VectorXd>(obs.data(), obs.size());
  if (ds.conditions.empty()) throw ConfigError("dataset: no rows in " + path);
  return ds;
}

std::string dataset_csv(const Dataset& ds, const std::vector<std::string>& condition_columns) {
  std::string out;
  for (const auto& col : condition_columns) out += col + ",";
  out += "observed\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (const auto& col : condition_columns) out += fmt_double(ds.conditions[r].at(col)) + ",";
    out += fmt_double(ds.observed[r]) + "\n";
  }
  return out;
}

void save_dataset_csv(const Dataset& ds, const std::vector<std::string>& condition_columns,
                      const std::string& path) {
  write_file(path, dataset_csv(ds, condition_columns));
}

std::string particles_csv(const ParticleSet& ps, const ParameterSpace& space) {
  Eigen::MatrixXd nat = particles_natural(ps, space);
  std::string out;
  for (std::size_t i = 0; i < space.size(); ++i) out += space.spec(i).name + ",";
  out += "logweight\n";
  for (Eigen::Index m = 0; m < nat.rows(); ++m) {
    for (Eigen::Index i = 0; i < nat.cols(); ++i) out += fmt_double(nat(m, i)) + ",";
    out += fmt_double(std::log(ps.weights[m])) + "\n";
  }
  return out;
}

json particles_sidecar(const ParticleSet& ps, const std::string& model_name,
                       const std::string& data_hash) {
  json side;
  side["gamma_schedule"] = ps.gamma_schedule;
  side["log_evidence"] = ps.log_evidence;
  side["seed"] = ps.seed;
  side["M"] = ps.particles.rows();
  side["model"] = model_name;
  side["data_hash"] = data_hash;
  return side;
}

ParticleSet load_particles(const std::string& csv_path, const std::string& sidecar_path,
                           const ParameterSpace& space) {
  std::istringstream in(read_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("particles: empty file " + csv_path);
  auto header = split_csv_line(line);
  if (header.size() != space.size() + 1 || header.back() != "logweight")
    throw ConfigError("particles: header does not match the parameter space");
  for (std::size_t i = 0; i < space.size(); ++i)
    if (header[i] != space.spec(i).name)
      throw ConfigError("particles: column '" + header[i] + "' out of order");

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> logw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ConfigError("particles: row width mismatch");
    Eigen::VectorXd theta(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
      theta[i] = std::strtod(cells[i].c_str(), nullptr);
    rows.push_back(logit_transform(space, theta));
    logw.push_back(std::strtod(cells.back().c_str(), nullptr));
  }
  if (rows.empty()) throw ConfigError("particles: no rows in " + csv_path);

  json side = json::parse(read_file(sidecar_path));
  ParticleSet ps;
  ps.particles.resize(rows.size(), space.size());
  for (std::size_t m = 0; m < rows.size(); ++m) ps.particles.row(m) = rows[m].transpose();
  ps.weights = Eigen::Map<Eigen::VectorXd>(logw.data(), logw.size()).array().exp();
  ps.weights /= ps.weights.sum();
  ps.logliks = Eigen::VectorXd::Zero(rows.size());
  ps.gamma = 1.0;
  ps.log_evidence = side.at("log_evidence").get<double>();
  ps.seed = side.at("seed").get<uint64_t>();
  ps.gamma_schedule = side.at("gamma_schedule").get<std::vector<double>>();
  return ps;
}

std::string mle_json(const std::vector<MleResult>& results, const ParameterSpace& space) {
  json arr = json::array();
  for (const auto& r : results) {
    json theta;
    for (std::size_t i = 0; i < space.size(); ++i) theta[space.spec(i).name] = r.theta[i];
    arr.push_back({{"theta", theta},
                   {"loglik", r.loglik},
                   {"start_index", r.start_index},
                   {"retained", r.retained}});
  }
  return arr.dump(2) + "\n";
}

std::vector<MleResult> load_mle_json(const std::string& path, const ParameterSpace& space) {
  json arr = json::parse(read_file(path));
  std::vector<MleResult> out;
  for (const auto& e : arr) {
    MleResult r;
    r.theta.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
      r.theta[i] = e.at("theta").at(space.spec(i).name).get<double>();
    r.loglik = e.at("loglik").get<double>();
    r.start_index = e.at("start_index").get<int>();
    r.retained = e.at("retained").get<bool>();
    r.optimizer_converged = true;
    out.push_back(std::move(r));
  }
  return out;
}

std::string spectrum_csv(const SloppySpectrum& sp) {
  std::string out = "j,lambda,lambda_over_lambda1\n";
  for (Eigen::Index j = 0; j < sp.eigenvalues.size(); ++j)
    out += std::to_string(j + 1) + "," + fmt_double(sp.eigenvalues[j]) + "," +
           fmt_double(sp.rescaled[j]) + "\n";
  return out;
}

SloppySpectrum load_spectrum(const std::string& spectrum_csv_path,
                             const std::string& eigenvectors_csv_path) {
  SloppySpectrum sp;
  {
    std::istringstream in(read_file(spectrum_csv_path));
    std::string line;
    std::getline(in, line);
    std::vector<double> lambda, ratio;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      if (cells.size() != 3) throw ConfigError("spectrum.csv: expected 3 columns");
      lambda.push_back(std::strtod(cells[1].c_str(), nullptr));
      ratio.push_back(std::strtod(cells[2].c_str(), nullptr));
    }
    sp.eigenvalues = Eigen::Map<Eigen::VectorXd>(lambda.data(), lambda.size());
    sp.rescaled = Eigen::Map<Eigen::VectorXd>(ratio.data(), ratio.size());
  }
  {
    std::istringstream in(read_file(eigenvectors_csv_path));
    std::string line;
    std::getline(in, line);
    auto header = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      if (cells.size() != header.size())
        throw ConfigError("eigenvectors.csv: row width mismatch");
      sp.param_names.push_back(cells[0]);
      std::vector<double> row;
      for (std::size_t i = 1; i < cells.size(); ++i)
        row.push_back(std::strtod(cells[i].c_str(), nullptr));
      rows.push_back(std::move(row));
    }
    sp.eigenvectors.resize(rows.size(), header.size() - 1);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c + 1 < header.size(); ++c) sp.eigenvectors(r, c) = rows[r][c];
  }
  if (sp.eigenvalues.size() != sp.eigenvectors.cols())
    throw ConfigError("spectrum artifacts disagree on dimension");
  for (Eigen::Index j = 0; j < sp.eigenvectors.cols(); ++j)
    sp.eigenparams.push_back(render_eigenparam(sp.param_names, sp.eigenvectors.col(j)));
  return sp;
}

std::string eigenvectors_csv(const SloppySpectrum& sp) {
  std::string out = "parameter";
  for (Eigen::Index j = 0; j < sp.eigenvectors.cols(); ++j)
    out += ",v" + std::to_string(j + 1);
  out += "\n";
  for (Eigen::Index i = 0; i < sp.eigenvectors.rows(); ++i) {
    out += sp.param_names[i];
    for (Eigen::Index j = 0; j < sp.eigenvectors.cols(); ++j)
      out += "," + fmt_double(sp.eigenvectors(i, j));
    out += "\n";
  }
  return out;
}

std::string eigenparams_text(const SloppySpectrum& sp) {
  std::string out;
  char buf[64];
  for (std::size_t j = 0; j < sp.eigenparams.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%2zu  %.6e  ", j + 1, sp.rescaled[j]);
    out += buf + sp.eigenparams[j] + "\n";
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& report) {
  std::string out = "dropped,n_params,rmse,log_evidence,bayes_factor,coverage,aic,status\n";
  for (const auto& r : report.rows)
    out += r.label + "," + std::to_string(r.n_params) + "," + fmt_double(r.rmse) + "," +
           fmt_double(r.log_evidence) + "," + fmt_double(r.bayes_factor) + "," +
           fmt_double(r.coverage) + "," + fmt_double(r.aic) + "," +
           (r.failed ? "failed" : "ok") + "\n";
  return out;
}

}  // namespace sloppy
