#include "modeshift/effect.hpp"

#include <boost/math/distributions/normal.hpp>

#include "modeshift/error.hpp"
#include "modeshift/stats.hpp"

namespace modeshift {

std::string_view estimand_name(Estimand estimand) {
  return estimand == Estimand::kAte ? "ATE" : "ATO";
}

void EffectEstimate::set_standard_error(double se) {
  if (!(se >= 0.0)) throw EstimationError("standard error must be nonnegative");
  standard_error = se;
  p_value = stats::normal_p_value(estimate, se);
}

std::optional<std::pair<double, double>> EffectEstimate::confidence_interval(double level) const {
  if (!standard_error) return std::nullopt;
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  return std::pair{estimate - z * *standard_error, estimate + z * *standard_error};
}

}  // namespace modeshift
