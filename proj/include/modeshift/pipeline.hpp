#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modeshift/config.hpp"
#include "modeshift/diagnostics.hpp"
#include "modeshift/error.hpp"
#include "modeshift/report.hpp"

namespace modeshift {

// Runs `body`, prefixing any module error with the stage name while keeping
// its category (validation or estimation).
template <typename Body>
decltype(auto) run_stage(std::string_view stage, Body&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(stage) + ": " + e.what());
  } catch (const EstimationError& e) {
    throw EstimationError(std::string(stage) + ": " + e.what());
  }
}

// Region selection, eligibility filters and the canonical id order.
Dataset prepare_sample(const Dataset& raw, Region control_region, const FilterConfig& filter);

// Subgroup flags for the stability check, in dataset order. `spec` is
// "random:<fraction>" (stream (seed, subgroup)) or "field:<binary field>".
BoolArray stability_flags(const Dataset& data, std::string_view spec, std::uint64_t seed);

struct PipelineResult {
  Json report;
  std::vector<BalanceRow> balance;
  OverlapReport overlap;
  std::vector<double> cates;  // empty unless the forest ran
};

// filter, describe, logit, overlap, PSM with bootstrap (and the trimmed
// variant), causal forest ATE and ATO, balance, stability, optional
// imputation and alternative control region, impact.
PipelineResult run_pipeline(const Dataset& raw, PipelineConfig config);

// report.json, balance.csv, overlap.svg and (with the forest) cates.svg.
// Files are written under temporary names and renamed at the end.
void write_outputs(const PipelineResult& result, const std::filesystem::path& directory);

}  // namespace modeshift
