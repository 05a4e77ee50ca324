#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace modeshift::stats {

double mean(std::span<const double> values);

// Sample standard deviation (n - 1 denominator). NaN for fewer than 2 values.
double sample_sd(std::span<const double> values);

double normal_cdf(double z);

// Two-sided p-value of a z statistic under the standard normal.
double two_sided_normal_p(double z);

// Two-sided normal p-value for estimate/se; handles se == 0.
double normal_p_value(double estimate, double standard_error);

// Two-sided p-value of a t statistic with `df` degrees of freedom.
double two_sided_t_p(double t, double df);

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Summary of one (possibly weighted) sample. `n` is the effective size.
struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;
  double n = 0.0;
};

SampleMoments moments(std::span<const double> values);

// Weighted moments with Kish effective size (sum w)^2 / sum w^2. Reduces to
// moments() when all weights are equal.
SampleMoments weighted_moments(std::span<const double> values,
                               std::span<const double> weights);

// Welch unequal-variance two-sample t-test.
TestResult welch_t_test(const SampleMoments& a, const SampleMoments& b);

// Paired (one-sample) t-test of differences against zero.
TestResult paired_t_test(std::span<const double> differences);

}  // namespace modeshift::stats
