#include "modeshift/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "modeshift/error.hpp"
#include "modeshift/logit.hpp"
#include "modeshift/parallel.hpp"
#include "modeshift/rng.hpp"

namespace modeshift::synth {

namespace {

// Counts unit-rate arrivals before time lambda.
int poisson(Rng& rng, double lambda) {
  int k = 0;
  double t = -std::log(1.0 - uniform01(rng));
  while (t <= lambda) {
    ++k;
    t -= std::log(1.0 - uniform01(rng));
  }
  return k;
}

double draw(Rng& rng, const Marginal& m) {
  switch (m.distribution) {
    case Distribution::kBernoulli:
      return uniform01(rng) < m.mean ? 1.0 : 0.0;
    case Distribution::kNormal:
      return std::clamp(m.mean + m.sd * standard_normal(rng), m.lower, m.upper);
    case Distribution::kBeta: {
      if (m.sd == 0.0) return m.mean;
      const double c = m.mean * (1.0 - m.mean) / (m.sd * m.sd) - 1.0;
      const double a = standard_gamma(rng, m.mean * c);
      const double b = standard_gamma(rng, (1.0 - m.mean) * c);
      return a / (a + b);
    }
    case Distribution::kGamma: {
      if (m.sd == 0.0) return m.mean;
      const double shape = (m.mean / m.sd) * (m.mean / m.sd);
      const double scale = m.sd * m.sd / m.mean;
      double x = 0.0;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        x = standard_gamma(rng, shape) * scale;
        if (x <= m.upper) return std::max(x, m.lower);
      }
      return std::clamp(x, m.lower, m.upper);
    }
    case Distribution::kStayLength: {
      if (m.sd == 0.0) return std::round(m.mean);
      const double mu = m.mean - m.lower;
      const double var = m.sd * m.sd;
      double lambda = mu;
      if (var > mu) {
        const double r = mu * mu / (var - mu);
        lambda = standard_gamma(rng, r) * (mu / r);
      }
      return m.lower + poisson(rng, lambda);
    }
  }
  return m.mean;
}

double linear_index(const LinearIndex& index, const GuestRecord& r,
                    const std::vector<double>& centers) {
  double eta = index.intercept;
  for (const auto& [field, slope] : index.slopes) {
    const auto v = field_value(r, field);
    eta += slope * (v.value_or(0.0) - centers[static_cast<std::size_t>(field)]);
  }
  return eta;
}

std::vector<double> marginal_centers(const DgpConfig& config) {
  std::vector<double> centers(all_fields().size(), 0.0);
  for (const auto& m : config.marginals) {
    centers[static_cast<std::size_t>(m.field)] = m.mean;
  }
  return centers;
}

void draw_covariates(Rng& rng, const DgpConfig& config, GuestRecord& r) {
  for (const auto& m : config.marginals) set_field(r, m.field, draw(rng, m));
}

// Outcome probabilities without and with treatment.
std::pair<double, double> outcome_probabilities(const DgpConfig& config, const GuestRecord& r,
                                                const std::vector<double>& centers) {
  const double base = linear_index(config.outcome, r, centers);
  double tau = config.treatment_coefficient;
  if (config.modifier) {
    const auto v = field_value(r, config.modifier->field);
    if (v.value_or(0.0) > config.modifier->threshold) tau += config.modifier->shift;
  }
  if (config.link == OutcomeLink::kLogit) return {logistic(base), logistic(base + tau)};
  return {std::clamp(base, 0.0, 1.0), std::clamp(base + tau, 0.0, 1.0)};
}

std::string synthetic_id(std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "g%07zu", index + 1);
  return buffer;
}

std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

}  // namespace

void validate(const DgpConfig& c) {
  if (c.population < 1) throw ValidationError("population must be at least 1");
  std::set<Field> seen;
  for (const auto& m : c.marginals) {
    const std::string name(field_name(m.field));
    if (m.field == Field::kInformed || m.field == Field::kUsedPt || m.field == Field::kUsedOffer) {
      throw ValidationError("marginal given for generated field " + name);
    }
    if (!seen.insert(m.field).second) throw ValidationError("duplicate marginal for " + name);
    if (!(m.sd >= 0.0) || !std::isfinite(m.mean)) {
      throw ValidationError("invalid moments for " + name);
    }
    switch (m.distribution) {
      case Distribution::kBernoulli:
        if (!(m.mean >= 0.0 && m.mean <= 1.0)) {
          throw ValidationError("Bernoulli parameter outside [0, 1] for " + name);
        }
        break;
      case Distribution::kNormal:
        if (m.lower > m.upper) throw ValidationError("empty clamp interval for " + name);
        break;
      case Distribution::kBeta:
        if (m.sd > 0.0 && !(m.mean > 0.0 && m.mean < 1.0 &&
                            m.sd * m.sd < m.mean * (1.0 - m.mean))) {
          throw ValidationError("no beta distribution with these moments for " + name);
        }
        break;
      case Distribution::kGamma:
        if (!(m.mean > 0.0)) throw ValidationError("gamma mean must be positive for " + name);
        break;
      case Distribution::kStayLength:
        if (!(m.lower >= 1.0) || m.lower != std::floor(m.lower) || !(m.mean >= m.lower)) {
          throw ValidationError("stay length needs an integer lower bound >= 1 below the mean");
        }
        break;
    }
    if (is_binary(m.field) && m.distribution != Distribution::kBernoulli) {
      throw ValidationError("binary field " + name + " needs a Bernoulli marginal");
    }
  }
  for (const auto& [field, rate] : c.missing_rates) {
    if (!is_nullable(field)) {
      throw ValidationError(std::string(field_name(field)) + " cannot be missing");
    }
    if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("missing rate outside [0, 1)");
  }
  if (!(c.offer_use_rate >= 0.0 && c.offer_use_rate <= 1.0)) {
    throw ValidationError("offer_use_rate outside [0, 1]");
  }
  if (!(c.alternate_region_share >= 0.0 && c.alternate_region_share <= 1.0)) {
    throw ValidationError("alternate_region_share outside [0, 1]");
  }
}

double SyntheticPopulation::sample_ate() const {
  if (oracle.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& o : oracle) sum += static_cast<double>(o.y1) - static_cast<double>(o.y0);
  return sum / static_cast<double>(oracle.size());
}

SyntheticPopulation generate_population(const DgpConfig& config) {
  validate(config);
  const auto centers = marginal_centers(config);
  const std::size_t n = config.population;
  std::vector<GuestRecord> records(n);
  std::vector<PotentialOutcomes> oracle(n);

  parallel_for(chunk_count(n), config.workers, [&](std::size_t chunk) {
    Rng rng = make_rng(config.seed, Stream::kSynthetic, chunk);
    const std::size_t end = std::min(n, (chunk + 1) * kChunkSize);
    for (std::size_t i = chunk * kChunkSize; i < end; ++i) {
      GuestRecord& r = records[i];
      r.id = synthetic_id(i);
      draw_covariates(rng, config, r);

      PotentialOutcomes& o = oracle[i];
      o.propensity = logistic(linear_index(config.treatment, r, centers));
      r.informed = uniform01(rng) < o.propensity;
      std::tie(o.p0, o.p1) = outcome_probabilities(config, r, centers);
      // One coin for both potential outcomes.
      const double u = uniform01(rng);
      o.y0 = u < o.p0;
      o.y1 = u < o.p1;
      r.used_pt = r.informed ? o.y1 : o.y0;
      const double offer = uniform01(rng);
      r.used_offer = r.informed && r.used_pt && offer < config.offer_use_rate;
      const double region = uniform01(rng);
      r.region = !r.informed && region < config.alternate_region_share
                     ? Region::kAusserrhodenToggenburg
                     : Region::kAppenzellInnerrhoden;
      for (const auto& [field, rate] : config.missing_rates) {
        if (uniform01(rng) < rate) set_field(r, field, std::nullopt);
      }
    }
  });

  return {Dataset(std::move(records), "synthetic seed=" + std::to_string(config.seed)),
          std::move(oracle)};
}

TrueEffect true_ate(const DgpConfig& config, std::size_t draws) {
  validate(config);
  if (draws < 1) throw ValidationError("true_ate needs at least one draw");
  const auto centers = marginal_centers(config);
  const std::size_t chunks = chunk_count(draws);
  std::vector<double> sum(chunks, 0.0), sum_sq(chunks, 0.0);
  parallel_for(chunks, config.workers, [&](std::size_t chunk) {
    Rng rng = make_rng(config.seed, Stream::kTrueAte, chunk);
    const std::size_t end = std::min(draws, (chunk + 1) * kChunkSize);
    GuestRecord r;
    for (std::size_t i = chunk * kChunkSize; i < end; ++i) {
      draw_covariates(rng, config, r);
      const auto [p0, p1] = outcome_probabilities(config, r, centers);
      sum[chunk] += p1 - p0;
      sum_sq[chunk] += (p1 - p0) * (p1 - p0);
    }
  });
  double s = 0.0, ss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sum[c];
    ss += sum_sq[c];
  }
  const double nd = static_cast<double>(draws);
  TrueEffect out;
  out.draws = draws;
  out.value = s / nd;
  if (draws > 1) {
    const double var = std::max(0.0, (ss - nd * out.value * out.value) / (nd - 1.0));
    out.standard_error = std::sqrt(var / nd);
  }
  return out;
}

void write_oracle(std::ostream& out, const SyntheticPopulation& population) {
  out << "id,y0,y1,p0,p1,propensity\n";
  char buffer[160];
  for (std::size_t i = 0; i < population.oracle.size(); ++i) {
    const auto& o = population.oracle[i];
    std::snprintf(buffer, sizeof buffer, ",%d,%d,%.17g,%.17g,%.17g\n", o.y0 ? 1 : 0,
                  o.y1 ? 1 : 0, o.p0, o.p1, o.propensity);
    out << population.data[i].id << buffer;
  }
}

Dataset mask_mcar(const Dataset& data, Field field, double rate, std::uint64_t seed) {
  if (!is_nullable(field)) {
    throw ValidationError(std::string(field_name(field)) + " cannot be missing");
  }
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("mask rate outside [0, 1]");
  Rng rng = make_rng(seed, Stream::kMask, static_cast<std::uint64_t>(field));
  std::vector<GuestRecord> records = data.records();
  for (auto& r : records) {
    if (uniform01(rng) < rate) set_field(r, field, std::nullopt);
  }
  return data.with_records(std::move(records));
}

// ---------------------------------------------------------------------------
// Presets

std::optional<Confounding> confounding_from_name(std::string_view name) {
  if (name == "randomized") return Confounding::kRandomized;
  if (name == "mild") return Confounding::kMild;
  if (name == "strong") return Confounding::kStrong;
  return std::nullopt;
}

std::optional<EffectShape> effect_shape_from_name(std::string_view name) {
  if (name == "calibrated") return EffectShape::kCalibrated;
  if (name == "constant") return EffectShape::kConstant;
  if (name == "two_group") return EffectShape::kTwoGroup;
  if (name == "null") return EffectShape::kNull;
  return std::nullopt;
}

namespace {

// Pooled moments of the estimation sample (530 informed, 124 uninformed).
std::vector<Marginal> survey_marginals() {
  using D = Distribution;
  return {
      {Field::kHotelRatioInformed, D::kBeta, 0.572, 0.297},
      {Field::kHolidayFlat, D::kBernoulli, 0.201},
      {Field::kTrainAccess, D::kBernoulli, 0.895},
      {Field::kAlone, D::kBernoulli, 0.118},
      {Field::kFamily, D::kBernoulli, 0.201},
      {Field::kPurposeNature, D::kBernoulli, 0.645},
      {Field::kLengthOfStay, D::kStayLength, 4.68, 2.07, 3.0},
      {Field::kDistanceCarKm, D::kGamma, 165.7, 75.9, 0.0, 400.0},
      {Field::kTtDiffMin, D::kNormal, 90.2, 23.5},
      {Field::kSwissResidence, D::kBernoulli, 0.914},
      {Field::kCarOwner, D::kBernoulli, 0.842},
      {Field::kHalfFare, D::kBernoulli, 0.799},
      {Field::kAge, D::kNormal, 59.8, 14.2, 18.0, 95.0},
      {Field::kWoman, D::kBernoulli, 0.552},
      {Field::kHighIncome, D::kBernoulli, 0.098},
  };
}

// Slopes reproducing the informed-minus-uninformed gaps of the survey
// (gap / variance for small effects).
std::vector<std::pair<Field, double>> mild_treatment_slopes() {
  return {
      {Field::kHotelRatioInformed, 2.3}, {Field::kHolidayFlat, -0.4},
      {Field::kTrainAccess, 0.85},       {Field::kFamily, -0.38},
      {Field::kPurposeNature, -0.36},    {Field::kLengthOfStay, 0.09},
      {Field::kDistanceCarKm, -0.0008},  {Field::kTtDiffMin, -0.0055},
      {Field::kSwissResidence, 0.37},    {Field::kHalfFare, 0.69},
      {Field::kAge, 0.024},              {Field::kWoman, 0.16},
  };
}

constexpr double kTreatmentIntercept = 1.700;
constexpr double kOutcomeIntercept = -1.111;
constexpr double kOutcomeScale = 1.1125;
constexpr double kCalibratedTau = 0.7677;

std::vector<std::pair<Field, double>> logit_outcome_slopes() {
  std::vector<std::pair<Field, double>> slopes = {
      {Field::kHotelRatioInformed, 0.6}, {Field::kHolidayFlat, -0.2},
      {Field::kTrainAccess, 0.7},        {Field::kAlone, 0.3},
      {Field::kFamily, -0.4},            {Field::kPurposeNature, 0.2},
      {Field::kLengthOfStay, 0.05},      {Field::kDistanceCarKm, 0.004},
      {Field::kTtDiffMin, -0.015},       {Field::kSwissResidence, 0.3},
      {Field::kCarOwner, -0.9},          {Field::kHalfFare, 0.8},
      {Field::kAge, 0.01},               {Field::kWoman, 0.2},
      {Field::kHighIncome, -0.3},
  };
  for (auto& s : slopes) s.second *= kOutcomeScale;
  return slopes;
}

// Probability-scale slopes; keep p0 inside [0.12, 0.73] for every x.
std::vector<std::pair<Field, double>> identity_outcome_slopes() {
  return {{Field::kHotelRatioInformed, 0.08},
          {Field::kTrainAccess, 0.06},
          {Field::kCarOwner, -0.08},
          {Field::kHalfFare, 0.08}};
}

}  // namespace

DgpConfig make_preset(Confounding confounding, EffectShape shape, std::size_t population,
                      std::uint64_t seed) {
  DgpConfig c;
  c.population = population;
  c.seed = seed;
  c.marginals = survey_marginals();

  c.treatment.intercept = kTreatmentIntercept;
  if (confounding != Confounding::kRandomized) {
    c.treatment.slopes = mild_treatment_slopes();
    if (confounding == Confounding::kStrong) {
      for (auto& s : c.treatment.slopes) s.second *= 2.0;
    }
  }

  switch (shape) {
    case EffectShape::kCalibrated:
    case EffectShape::kNull:
      c.link = OutcomeLink::kLogit;
      c.outcome = {kOutcomeIntercept, logit_outcome_slopes()};
      c.treatment_coefficient = shape == EffectShape::kCalibrated ? kCalibratedTau : 0.0;
      break;
    case EffectShape::kConstant:
      c.link = OutcomeLink::kIdentity;
      c.outcome = {0.3, identity_outcome_slopes()};
      c.treatment_coefficient = 0.15;
      break;
    case EffectShape::kTwoGroup:
      c.link = OutcomeLink::kIdentity;
      c.outcome = {0.3, identity_outcome_slopes()};
      c.treatment_coefficient = 0.0;
      c.modifier = EffectModifier{Field::kWoman, 0.5, 0.3};
      for (auto& m : c.marginals) {
        if (m.field == Field::kWoman) m.mean = 0.5;
      }
      break;
  }
  return c;
}

}  // namespace modeshift::synth
