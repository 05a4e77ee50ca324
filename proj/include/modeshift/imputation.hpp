#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modeshift/effect.hpp"
#include "modeshift/survey_data.hpp"

namespace modeshift {

struct ImputationConfig {
  int imputations = 5;  // m
  int donors = 5;       // predictive mean matching pool
  int sweeps = 10;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

void validate(const ImputationConfig& config);

// Chained equations over the nullable fields in the order age, tt_diff_min,
// car_owner, woman, high_income. Continuous fields use predictive mean
// matching, binary fields draws from a posterior-perturbed logit. Each
// chain runs on stream (seed, chain). Observed cells are never touched.
// Throws ValidationError when a field has fewer than half its values.
std::vector<Dataset> impute_chained(const Dataset& data, const ImputationConfig& config);

// Rubin's rules: mean of the estimates, variance W + (1 + 1/m) B.
EffectEstimate pool_rubin(std::span<const EffectEstimate> estimates);

}  // namespace modeshift
