#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "catgeo/causal_transform.hpp"
#include "catgeo/estimation.hpp"
#include "catgeo/geometry.hpp"
#include "catgeo/selfcheck.hpp"

namespace catgeo {

struct InterventionSpec {
  std::string w0, w1, z0, z1;
};

/// Threshold names understood by the pipeline and their default values.
std::map<std::string, double> default_thresholds();

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path matrix_path;
  std::filesystem::path vocab_path;
  std::filesystem::path hierarchy_path;
  std::filesystem::path out_dir;
  TransformMode transform_mode = TransformMode::causal;
  double floor_ratio = kDefaultFloorRatio;
  Estimator estimator = Estimator::lda;
  double split_fraction = 0.7;
  std::int64_t min_tokens = 50;
  bool merge = true;
  std::int64_t random_count = 1000;
  std::int64_t max_pairs = kDefaultMaxPairs;
  unsigned threads = 1;
  std::vector<InterventionSpec> interventions;
  bool unit_norm = false;
  std::map<std::string, double> thresholds = default_thresholds();

  nlohmann::json to_json() const;
};

struct PipelineResult {
  bool ok = false;
  std::string failed_stage;
  std::string message;
  std::vector<CheckResult> checks;
  std::vector<std::filesystem::path> artifacts;  // relative to out_dir
};

/// Runs every stage in order, writing reports under cfg.out_dir. A stage error
/// stops the run; whatever was written so far is kept and listed in the manifest.
PipelineResult run_pipeline(const RunConfig& cfg);

/// Recomputes the hash of every artifact listed in <dir>/manifest.json.
/// Returns one message per missing or altered file.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace catgeo
