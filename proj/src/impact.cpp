#include "modeshift/impact.hpp"

#include "modeshift/error.hpp"

namespace modeshift {

void validate(const ImpactConfig& c) {
  if (!(c.distance_car_km >= 0.0) || !(c.distance_pt_km >= 0.0)) {
    throw ValidationError("impact distances must be nonnegative");
  }
  if (!(c.emission_car_g_per_pkm >= 0.0) || !(c.emission_pt_g_per_pkm >= 0.0)) {
    throw ValidationError("emission factors must be nonnegative");
  }
  if (!(c.uptake_share > 0.0 && c.uptake_share <= 1.0)) {
    throw ValidationError("uptake_share must lie in (0, 1]");
  }
  if (!(c.per_capita_transport_kg > 0.0)) {
    throw ValidationError("per_capita_transport_kg must be positive");
  }
}

double co2_savings_per_switcher(double distance_car_km, double distance_pt_km,
                                double emission_car_g_per_pkm, double emission_pt_g_per_pkm) {
  if (distance_car_km < 0.0 || distance_pt_km < 0.0 || emission_car_g_per_pkm < 0.0 ||
      emission_pt_g_per_pkm < 0.0) {
    throw ValidationError("impact inputs must be nonnegative");
  }
  return 2.0 * (distance_car_km * emission_car_g_per_pkm -
                distance_pt_km * emission_pt_g_per_pkm) / 1000.0;
}

Attribution attribution_summary(double ate, double uptake_share, double savings_kg,
                                double per_capita_transport_kg) {
  if (!(uptake_share > 0.0)) throw ValidationError("uptake_share must be positive");
  if (!(per_capita_transport_kg > 0.0)) {
    throw ValidationError("per_capita_transport_kg must be positive");
  }
  return {ate / uptake_share, savings_kg / per_capita_transport_kg};
}

}  // namespace modeshift
