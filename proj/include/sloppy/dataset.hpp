#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

namespace sloppy {

// Named inputs for one observation (e.g. X, Pg, R for the polyp model).
struct Condition {
  std::map<std::string, double> inputs;
  double at(const std::string& name) const;
};

struct Dataset {
  std::vector<Condition> conditions;
  Eigen::VectorXd observed;

  std::size_t size() const { return conditions.size(); }
};

// CSV with a header naming the condition columns followed by `observed`,
// one row per observation.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& ds, const std::vector<std::string>& condition_columns,
                      const std::string& path);

}  // namespace sloppy
