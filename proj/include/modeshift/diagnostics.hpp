#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modeshift/causal_forest.hpp"
#include "modeshift/psm.hpp"
#include "modeshift/stats.hpp"
#include "modeshift/survey_data.hpp"

namespace modeshift {

// 100 * (mean_t - mean_c) / sd_t. Empty when sd_t is zero or not finite.
std::optional<double> standardized_mean_difference(double mean_treated, double mean_control,
                                                   double sd_treated);

struct BalanceRow {
  Field field;
  double mean_treated_before = 0.0;
  double mean_control_before = 0.0;
  std::optional<double> smd_before;  // empty: treated sd is zero
  std::optional<double> p_before;  // empty when a group has fewer than 2 values
  std::optional<double> mean_treated_after;
  std::optional<double> mean_control_after;
  std::optional<double> smd_after;
  std::optional<double> p_after;
  bool smd_undefined = false;  // treated-group sd is zero
};

// Per-record weights describing the matched sample: each unit counts once
// for itself plus 1/k for every opposite-group unit it serves as one of k
// tied matches.
std::vector<double> matching_weights(std::span<const bool> treated, const MatchSet& matches);

// Overlap weights: 1 - e for treated units, e for controls.
std::vector<double> overlap_weights(std::span<const bool> treated,
                                    std::span<const double> scores);

// Before columns use the raw groups; after columns, filled only when
// `after_weights` is given, use the weighted groups with the same treated
// sd in the denominator. Blank cells are skipped.
std::vector<BalanceRow> balance_table(
    const Dataset& data, std::span<const Field> fields,
    std::optional<std::span<const double>> after_weights = std::nullopt);

void write_balance_csv(std::ostream& out, const std::vector<BalanceRow>& rows);

struct OverlapBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t treated = 0;
  std::size_t control = 0;

  bool single_group() const { return (treated == 0) != (control == 0); }
};

struct OverlapReport {
  std::vector<OverlapBin> bins;
  std::optional<double> min_treated, max_treated, min_control, max_control;
  std::size_t boundary_scores = 0;           // scores equal to 0 or 1
  std::vector<std::size_t> single_group_bins;  // indices into bins

  bool boundary_violation() const { return boundary_scores > 0; }
};

inline constexpr int kDefaultOverlapBins = 20;

// Equal-width bins over [0, 1]; a score of exactly 1 falls in the last bin.
// Throws ValidationError for scores outside [0, 1].
OverlapReport overlap_report(std::span<const double> scores, std::span<const bool> treated,
                             int bins = kDefaultOverlapBins);

struct HistogramSeries {
  std::string label;
  std::string color;
  std::vector<double> counts;
};

// Bar chart of one or more series sharing the bin edges [lower, upper].
void write_histogram_svg(std::ostream& out, const std::string& title, double lower,
                         double upper, const std::vector<HistogramSeries>& series);

void write_overlap_svg(std::ostream& out, const OverlapReport& report);
void write_cate_svg(std::ostream& out, std::span<const double> cates, int bins = 30);

struct StabilityResult {
  std::vector<double> cate_full;      // per record, dataset order
  std::vector<double> cate_subgroup;
  std::vector<double> difference;     // full minus subgroup
  double mean_difference = 0.0;
  stats::TestResult test;             // paired t-test of the differences
  std::size_t subgroup_size = 0;
};

// Fits one forest on all records and one on the flagged subgroup with the
// same configuration, predicts every record under both (out-of-bag where
// the record was trained on) and tests the paired differences.
StabilityResult subsample_stability_check(const Dataset& data, std::span<const bool> subgroup,
                                          const ForestConfig& config,
                                          const CausalFitOptions& options = {});

}  // namespace modeshift
