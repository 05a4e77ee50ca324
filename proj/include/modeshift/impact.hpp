#pragma once

namespace modeshift {

// Default inputs: average one-way distances of the guests and the emission
// factors of car and public transport (grams CO2 per passenger km).
struct ImpactConfig {
  double distance_car_km = 165.8;
  double distance_pt_km = 187.7;
  double emission_car_g_per_pkm = 186.4;
  double emission_pt_g_per_pkm = 12.4;
  double uptake_share = 0.413;  // informed guests who used the offer
  double per_capita_transport_kg = 1620.0;
};

void validate(const ImpactConfig& config);

// Kilograms CO2 saved by one round trip taken by public transport instead
// of car. Negative when the public transport legs emit more.
double co2_savings_per_switcher(double distance_car_km, double distance_pt_km,
                                double emission_car_g_per_pkm, double emission_pt_g_per_pkm);

struct Attribution {
  double attributed_share = 0.0;  // offer users who would not have travelled by public transport
  double national_share = 0.0;    // savings relative to per-capita transport emissions
};

// Throws ValidationError when uptake_share or per_capita_transport_kg is
// not positive.
Attribution attribution_summary(double ate, double uptake_share, double savings_kg,
                                double per_capita_transport_kg);

}  // namespace modeshift
