#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "modeshift/survey_data.hpp"

namespace modeshift::synth {

enum class Distribution {
  kBernoulli,   // mean = p
  kNormal,      // clamped to [lower, upper]
  kBeta,        // by moments, on [0, 1]
  kGamma,       // by moments, redrawn above `upper`
  kStayLength,  // lower + negative binomial, integer
};

struct Marginal {
  Field field;
  Distribution distribution = Distribution::kBernoulli;
  double mean = 0.0;
  double sd = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

// intercept + sum slope * (x - marginal mean). Fields without a marginal
// contribute nothing.
struct LinearIndex {
  double intercept = 0.0;
  std::vector<std::pair<Field, double>> slopes;
};

enum class OutcomeLink { kLogit, kIdentity };

// Adds `shift` to the treatment coefficient where field > threshold.
struct EffectModifier {
  Field field;
  double threshold = 0.0;
  double shift = 0.0;
};

struct DgpConfig {
  std::vector<Marginal> marginals;
  LinearIndex treatment;  // logit of Pr(informed = 1 | x)
  LinearIndex outcome;    // Pr(used_pt = 1 | x, d) = link(index + d * tau(x))
  OutcomeLink link = OutcomeLink::kLogit;
  double treatment_coefficient = 0.0;
  std::optional<EffectModifier> modifier;
  double offer_use_rate = 0.93;  // Pr(used_offer | informed, used_pt)
  // Share of uninformed guests placed in the alternative control region.
  double alternate_region_share = 0.0;
  std::vector<std::pair<Field, double>> missing_rates;  // MCAR, nullable fields only
  std::size_t population = 4000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

// Throws ValidationError.
void validate(const DgpConfig& config);

enum class Confounding { kRandomized, kMild, kStrong };
enum class EffectShape {
  kCalibrated,  // logit outcome, true ATE near 0.15
  kConstant,    // identity link, tau = 0.15 everywhere
  kTwoGroup,    // identity link, tau = 0.3 for women (share 0.5), else 0
  kNull,        // logit outcome, no effect
};

std::optional<Confounding> confounding_from_name(std::string_view name);
std::optional<EffectShape> effect_shape_from_name(std::string_view name);

DgpConfig make_preset(Confounding confounding, EffectShape shape, std::size_t population,
                      std::uint64_t seed);

struct PotentialOutcomes {
  bool y0 = false;
  bool y1 = false;
  double p0 = 0.0;
  double p1 = 0.0;
  double propensity = 0.0;
};

// `oracle[i]` belongs to `data[i]`. Estimators only ever see `data`.
struct SyntheticPopulation {
  Dataset data;
  std::vector<PotentialOutcomes> oracle;

  double sample_ate() const;  // mean of y1 - y0 in this population
};

// Records are generated in chunks of kChunkSize, each on its own stream, so
// the output depends on the seed only.
inline constexpr std::size_t kChunkSize = 1000;

SyntheticPopulation generate_population(const DgpConfig& config);

struct TrueEffect {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

// Average of p1(x) - p0(x) over fresh covariate draws, i.e. E[Y(1) - Y(0)]
// with the outcome coin integrated out.
TrueEffect true_ate(const DgpConfig& config, std::size_t draws = 1'000'000);

// Sidecar with the hidden columns: id,y0,y1,p0,p1,propensity.
void write_oracle(std::ostream& out, const SyntheticPopulation& population);

// Blanks `field` in each record independently with probability `rate`.
Dataset mask_mcar(const Dataset& data, Field field, double rate, std::uint64_t seed);

}  // namespace modeshift::synth
