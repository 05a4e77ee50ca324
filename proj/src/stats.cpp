#include "modeshift/stats.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace modeshift::stats {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double mean(std::span<const double> values) {
  if (values.empty()) return kNaN;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return kNaN;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_normal_p(double z) {
  if (std::isnan(z)) return kNaN;
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

double normal_p_value(double estimate, double standard_error) {
  if (standard_error > 0.0) return two_sided_normal_p(estimate / standard_error);
  return estimate == 0.0 ? 1.0 : 0.0;
}

double two_sided_t_p(double t, double df) {
  if (std::isnan(t) || !(df > 0.0)) return kNaN;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

SampleMoments moments(std::span<const double> values) {
  SampleMoments m;
  m.n = static_cast<double>(values.size());
  m.mean = mean(values);
  const double sd = sample_sd(values);
  m.variance = sd * sd;
  return m;
}

SampleMoments weighted_moments(std::span<const double> values,
                               std::span<const double> weights) {
  SampleMoments m;
  double sw = 0.0, sw2 = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    sw2 += weights[i] * weights[i];
    swx += weights[i] * values[i];
  }
  if (sw <= 0.0) {
    m.mean = m.variance = kNaN;
    return m;
  }
  m.mean = swx / sw;
  m.n = sw * sw / sw2;
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ss += weights[i] * (values[i] - m.mean) * (values[i] - m.mean);
  }
  m.variance = m.n > 1.0 ? ss / sw * m.n / (m.n - 1.0) : kNaN;
  return m;
}

TestResult welch_t_test(const SampleMoments& a, const SampleMoments& b) {
  TestResult r;
  const double diff = a.mean - b.mean;
  const double va = a.variance / a.n;
  const double vb = b.variance / b.n;
  const double se2 = va + vb;
  if (std::isnan(se2)) {
    r.statistic = r.df = r.p_value = kNaN;
    return r;
  }
  if (se2 == 0.0) {
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    r.df = a.n + b.n - 2.0;
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = diff / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (a.n - 1.0) + vb * vb / (b.n - 1.0));
  r.p_value = two_sided_t_p(r.statistic, r.df);
  return r;
}

TestResult paired_t_test(std::span<const double> differences) {
  TestResult r;
  const double n = static_cast<double>(differences.size());
  const double m = mean(differences);
  const double sd = sample_sd(differences);
  r.df = n - 1.0;
  if (std::isnan(sd)) {
    r.statistic = r.p_value = kNaN;
    return r;
  }
  if (sd == 0.0) {
    r.statistic = m == 0.0 ? 0.0 : std::copysign(INFINITY, m);
    r.p_value = m == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = m / (sd / std::sqrt(n));
  r.p_value = two_sided_t_p(r.statistic, r.df);
  return r;
}

}  // namespace modeshift::stats
