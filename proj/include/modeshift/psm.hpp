#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "modeshift/effect.hpp"
#include "modeshift/logit.hpp"
#include "modeshift/survey_data.hpp"

namespace modeshift {

// For each unit, the opposite-group units at minimal propensity distance
// (several when distances tie exactly).
struct MatchSet {
  std::vector<std::vector<std::size_t>> matches;
};

// One-nearest-neighbour matching with replacement on |score difference|.
MatchSet match_nearest(std::span<const bool> treated, std::span<const double> scores);

// ATE by 1-NN propensity matching: each unit's missing potential outcome is
// the mean outcome of its matches. Standard error stays empty.
EffectEstimate estimate_ate_psm(const Dataset& data, std::span<const double> scores);

struct PropensityFit {
  LogitModel model;
  std::vector<double> scores;
};

PropensityFit fit_propensity(const Dataset& data, std::span<const Field> covariates,
                             const LogitOptions& options = {});

struct PsmOptions {
  std::vector<Field> covariates = default_covariates();
  LogitOptions logit;
};

struct BootstrapOptions {
  int replications = 999;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct BootstrapResult {
  EffectEstimate estimate;
  std::vector<double> replicates;  // in replicate order
  std::size_t redraws = 0;         // resamples discarded because a fit failed
};

// Point estimate on `data`, then B resamples stratified by treatment group,
// each re-fitting the propensity model and re-matching. The standard error
// is the sd of the replicate estimates.
BootstrapResult bootstrap_psm(const Dataset& data, const PsmOptions& psm,
                              const BootstrapOptions& options);

EffectEstimate bootstrap_inference(const Dataset& data, const PsmOptions& psm,
                                   const BootstrapOptions& options);

// Indices of records kept by the common-support rule: treated records whose
// score exceeds the largest control score are dropped.
std::vector<std::size_t> common_support_indices(const Dataset& data,
                                                std::span<const double> scores);

Dataset trim_common_support(const Dataset& data, std::span<const double> scores);

inline constexpr std::string_view kRuleCommonSupport = "common_support";

}  // namespace modeshift
