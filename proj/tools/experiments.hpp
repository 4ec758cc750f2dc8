#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "wnlab/estimators.hpp"
#include "wnlab/kernel.hpp"

namespace wnlab::cli {

struct RunContext {
  const KernelEvaluator* kernel = nullptr;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir;
};

struct ExperimentResult {
  std::vector<EstimatorReport> reports;
  /// name -> {"rejected": k, "total": n}
  nlohmann::json rejections = nlohmann::json::object();
};

using PreparedRun = std::function<ExperimentResult(const RunContext&)>;

struct ConfigKey {
  std::string name;
  std::string fallback;  // printed default; empty means required
  std::string help;
};

struct ExperimentInfo {
  std::string name;
  std::string verifies;
  std::vector<ConfigKey> keys;
  /// Reads every key it needs (so unknown keys can be rejected before any
  /// work starts) and returns the run.
  std::function<PreparedRun(const Config&)> prepare;
};

const std::vector<ExperimentInfo>& registry();
const ExperimentInfo* find_experiment(const std::string& name);

/// Keys every experiment accepts.
const std::vector<ConfigKey>& common_keys();

}  // namespace wnlab::cli
