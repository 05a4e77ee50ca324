#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modeshift/causal_forest.hpp"
#include "modeshift/impact.hpp"
#include "modeshift/imputation.hpp"
#include "modeshift/survey_data.hpp"

namespace modeshift {

enum class MethodSelection { kPsm, kForest, kBoth };

// Everything one pipeline run depends on. Loaded from a flat key = value
// file; every key is optional and defaults to the value below.
struct PipelineConfig {
  std::filesystem::path input;
  std::uint64_t seed = 0;
  unsigned workers = 0;

  Region control_region = Region::kAppenzellInnerrhoden;
  std::optional<Region> alternate_control_region;
  FilterConfig filter;

  MethodSelection method = MethodSelection::kBoth;
  TargetSample target = TargetSample::kAll;  // used by `estimate`; `run` reports both
  bool trim = true;
  int bootstrap_replications = 999;
  ForestConfig forest;

  // "random:<fraction>" or "field:<binary field>" (records with value 1).
  std::string stability_subgroup = "random:0.7";

  bool impute = false;
  ImputationConfig imputation;

  ImpactConfig impact;

  // Pushes seed and workers into the module configs.
  void propagate();
};

// Keys, one per line: `key = value`; `#` starts a comment. Unknown keys and
// malformed values throw ValidationError naming the line.
PipelineConfig parse_config(std::istream& in);
void validate(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

// Every key with its value in `config`, in documentation order.
std::vector<std::pair<std::string, std::string>> config_values(const PipelineConfig& config);
inline std::vector<std::pair<std::string, std::string>> config_defaults() {
  return config_values(PipelineConfig{});
}

// Applies one key; used by the parser and for command-line overrides.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

std::optional<MethodSelection> method_from_name(std::string_view name);
std::optional<TargetSample> target_from_name(std::string_view name);

}  // namespace modeshift
