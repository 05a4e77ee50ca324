#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "modeshift/rng.hpp"
#include "modeshift/survey_data.hpp"

namespace fixtures {

// Eligible, complete record: passes every default filter.
inline modeshift::GuestRecord guest(const std::string& id, bool informed, bool used_pt) {
  modeshift::GuestRecord r;
  r.id = id;
  r.informed = informed;
  r.used_pt = used_pt;
  r.hotel_ratio_informed = 0.5;
  r.length_of_stay = 4;
  r.distance_car_km = 150.0;
  r.tt_diff_min = 80.0;
  r.swiss_residence = true;
  r.car_owner = true;
  r.age = 55.0;
  r.woman = false;
  r.high_income = false;
  return r;
}

inline std::string id_of(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%05zu", i);
  return buf;
}

// Guests with random covariates and treatment independent of everything.
inline modeshift::Dataset random_guests(std::size_t n, std::uint64_t seed) {
  modeshift::Rng rng(seed);
  auto u = [&] { return modeshift::uniform01(rng); };
  std::vector<modeshift::GuestRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = guest(id_of(i), u() < 0.5, u() < 0.3);
    r.hotel_ratio_informed = u();
    r.holiday_flat = u() < 0.2;
    r.train_access = u() < 0.9;
    r.alone = u() < 0.1;
    r.family = u() < 0.2;
    r.purpose_nature = u() < 0.6;
    r.length_of_stay = 3 + static_cast<int>(u() * 5);
    r.distance_car_km = 20.0 + 300.0 * u();
    r.tt_diff_min = 40.0 + 100.0 * u();
    r.swiss_residence = u() < 0.9;
    r.car_owner = u() < 0.8;
    r.half_fare = u() < 0.7;
    r.age = 20.0 + 60.0 * u();
    r.woman = u() < 0.5;
    r.high_income = u() < 0.1;
    out.push_back(r);
  }
  return modeshift::Dataset(std::move(out), "fixture");
}

inline std::vector<double> column(const modeshift::Dataset& d, modeshift::Field f) {
  std::vector<double> v;
  for (const auto& r : d.records()) {
    if (const auto x = modeshift::field_value(r, f)) v.push_back(*x);
  }
  return v;
}

}  // namespace fixtures
