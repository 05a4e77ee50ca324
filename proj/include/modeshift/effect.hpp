#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <string>
#include <string_view>

namespace modeshift {

enum class Estimand { kAte, kAto };

std::string_view estimand_name(Estimand estimand);

// A treatment-effect estimate on the probability scale.
struct EffectEstimate {
  double estimate = 0.0;
  std::optional<double> standard_error;  // empty until inference has run
  std::optional<double> p_value;
  Estimand estimand = Estimand::kAte;
  std::string method;
  std::size_t n_used = 0;
  std::optional<std::uint64_t> seed;

  // Fills standard_error and the two-sided normal p-value.
  void set_standard_error(double se);

  // Lower/upper bounds of the normal confidence interval at `level`.
  std::optional<std::pair<double, double>> confidence_interval(double level = 0.95) const;

  bool operator==(const EffectEstimate&) const = default;
};

}  // namespace modeshift
