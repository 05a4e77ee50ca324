#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "modeshift/diagnostics.hpp"
#include "modeshift/error.hpp"
#include "modeshift/synthdata.hpp"

using namespace modeshift;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

ForestConfig forest_config(int trees, std::uint64_t seed) {
  ForestConfig c;
  c.num_trees = trees;
  c.seed = seed;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("SMD from group means and treated sd") {
    CHECK(std::abs(*standardized_mean_difference(0.612, 0.407, 0.29) - 70.793) < 0.5);
    CHECK(std::abs(*standardized_mean_difference(0.908, 0.831, 0.29) - 26.524) < 0.5);
    CHECK(std::abs(*standardized_mean_difference(0.819, 0.710, 0.39) - 28.325) < 0.5);
    CHECK_FALSE(standardized_mean_difference(1.0, 0.5, 0.0).has_value());
  }

  TEST_CASE("property: SMD antisymmetry up to the denominator") {
    Rng rng(90);
    for (int trial = 0; trial < 100; ++trial) {
      const double mt = standard_normal(rng), mc = standard_normal(rng);
      const double st = 0.1 + uniform01(rng), sc = 0.1 + uniform01(rng);
      const double a = *standardized_mean_difference(mt, mc, st);
      const double b = *standardized_mean_difference(mc, mt, sc);
      CHECK(a * st == doctest::Approx(-b * sc).epsilon(1e-12));
      CHECK(*standardized_mean_difference(mt, mt, st) == 0.0);
    }
  }

  TEST_CASE("identical groups give SMD 0 and p 1") {
    std::vector<GuestRecord> rs;
    for (int i = 0; i < 6; ++i) {
      auto t = fixtures::guest("t" + std::to_string(i), true, false);
      auto c = fixtures::guest("c" + std::to_string(i), false, false);
      t.age = c.age = 30.0 + 7.0 * i;
      rs.push_back(t);
      rs.push_back(c);
    }
    const auto rows = balance_table(Dataset(rs), std::vector<Field>{Field::kAge});
    REQUIRE(rows.size() == 1);
    CHECK(*rows[0].smd_before == 0.0);
    CHECK(*rows[0].p_before == doctest::Approx(1.0));
    CHECK_FALSE(rows[0].smd_after.has_value());
    CHECK_FALSE(rows[0].mean_treated_after.has_value());
  }

  TEST_CASE("balance p matches a hand Welch computation") {
    const double a[] = {2.1, 3.4, 1.9, 5.0, 4.2};
    const double b[] = {1.0, 0.7, 2.2, 1.5, 0.9};
    std::vector<GuestRecord> rs;
    for (int i = 0; i < 5; ++i) {
      auto t = fixtures::guest("t" + std::to_string(i), true, false);
      auto c = fixtures::guest("c" + std::to_string(i), false, false);
      t.distance_car_km = a[i];
      c.distance_car_km = b[i];
      rs.push_back(t);
      rs.push_back(c);
    }
    const auto rows = balance_table(Dataset(rs), std::vector<Field>{Field::kDistanceCarKm});
    // means 3.32 / 1.26, treated sd sqrt(1.777)
    CHECK(rows[0].mean_treated_before == doctest::Approx(3.32));
    CHECK(rows[0].mean_control_before == doctest::Approx(1.26));
    CHECK(*rows[0].smd_before == doctest::Approx(100.0 * 2.06 / std::sqrt(1.777)));
    CHECK(std::abs(*rows[0].p_before - 0.02194438166237112) < 1e-6);
  }

  TEST_CASE("zero treated variance is flagged") {
    std::vector<GuestRecord> rs{fixtures::guest("a", true, false), fixtures::guest("b", true, true),
                                fixtures::guest("c", false, false), fixtures::guest("e", false, true)};
    rs[3].swiss_residence = false;
    const auto rows = balance_table(Dataset(rs), std::vector<Field>{Field::kSwissResidence});
    CHECK(rows[0].smd_undefined);
    CHECK_FALSE(rows[0].smd_before.has_value());
    std::ostringstream csv;
    write_balance_csv(csv, rows);
    CHECK(csv.str().find("swiss_residence,1,0.5,,") != std::string::npos);
  }

  TEST_CASE("exact twins balance perfectly after matching") {
    std::vector<GuestRecord> rs;
    std::vector<double> scores;
    Rng rng(4);
    for (int i = 0; i < 8; ++i) {
      auto t = fixtures::guest("t" + std::to_string(i), true, i % 2 == 0);
      t.age = 20.0 + 60.0 * uniform01(rng);
      t.distance_car_km = 300.0 * uniform01(rng);
      t.half_fare = i % 3 == 0;
      auto c = t;
      c.id = "c" + std::to_string(i);
      c.informed = false;
      rs.push_back(t);
      rs.push_back(c);
      const double s = 0.1 + 0.1 * i;
      scores.push_back(s);
      scores.push_back(s);
    }
    const Dataset d(rs);
    const BoolArray treated = treatment_flags(d);
    const auto w = matching_weights(treated, match_nearest(treated, scores));
    for (double x : w) CHECK(x == 2.0);
    const std::vector<Field> fields{Field::kAge, Field::kDistanceCarKm, Field::kHalfFare};
    const auto rows = balance_table(d, fields, std::span<const double>(w));
    for (const auto& r : rows) {
      REQUIRE(r.smd_after.has_value());
      CHECK(*r.smd_after == 0.0);
      CHECK(*r.p_after == doctest::Approx(1.0));
    }
  }

  TEST_CASE("matching weights count tied matches fractionally") {
    // t0 splits between the two controls (tie), t1 takes the second;
    // the first control takes t0, the second t1
    const BoolArray treated{true, true, false, false};
    const std::vector<double> s{0.5, 0.875, 0.25, 0.75};
    const auto w = matching_weights(treated, match_nearest(treated, s));
    CHECK(w[0] == 2.0);
    CHECK(w[1] == 2.0);
    CHECK(w[2] == 1.5);
    CHECK(w[3] == 2.5);
    const auto ow = overlap_weights(treated, s);
    CHECK(ow[0] == 0.5);
    CHECK(ow[2] == 0.25);
  }

  TEST_CASE("overlap: all scores 0.5 share one bin") {
    const std::vector<double> s(10, 0.5);
    const BoolArray t{true, false, true, false, true, false, true, false, true, false};
    const auto r = overlap_report(s, t);
    std::size_t populated = 0;
    for (const auto& b : r.bins) populated += (b.treated + b.control) > 0 ? 1 : 0;
    CHECK(populated == 1);
    CHECK(r.bins[10].treated == 5);
    CHECK(r.bins[10].control == 5);
    CHECK(r.single_group_bins.empty());
    CHECK_FALSE(r.boundary_violation());
    CHECK(*r.min_treated == 0.5);
    CHECK(*r.max_control == 0.5);
  }

  TEST_CASE("overlap: treated-only top bin is flagged") {
    const std::vector<double> s{0.97, 0.96, 0.4, 0.42, 0.41, 0.3};
    const BoolArray t{true, true, true, false, false, false};
    const auto r = overlap_report(s, t);
    CHECK(r.bins[19].lower == 0.95);
    CHECK(r.bins[19].treated == 2);
    CHECK(r.single_group_bins == std::vector<std::size_t>{6, 19});
    CHECK_FALSE(r.boundary_violation());
  }

  TEST_CASE("overlap: scores on the boundary") {
    const BoolArray t{true, false};
    const auto r = overlap_report(std::vector<double>{1.0, 0.5}, t);
    CHECK(r.boundary_violation());
    CHECK(r.bins.back().treated == 1);
    CHECK(overlap_report(std::vector<double>{0.0, 0.5}, t).boundary_scores == 1);
    CHECK_THROWS_AS(overlap_report(std::vector<double>{1.2, 0.5}, t), ValidationError);
    CHECK_THROWS_AS(overlap_report(std::vector<double>{0.2, 0.5}, t, 0), ValidationError);
  }

  TEST_CASE("svg output") {
    const BoolArray t{true, false, true};
    const auto r = overlap_report(std::vector<double>{0.2, 0.3, 0.7}, t, 4);
    std::ostringstream svg;
    write_overlap_svg(svg, r);
    CHECK(svg.str().rfind("<svg", 0) == 0);
    CHECK(count(svg.str(), "fill-opacity") == 8);
    std::ostringstream cate;
    write_cate_svg(cate, std::vector<double>{0.1, 0.2, 0.2, 0.3}, 5);
    CHECK(count(cate.str(), "fill-opacity") == 5);
    CHECK(cate.str().find("</svg>") != std::string::npos);
  }

  TEST_CASE("stability: subgroup equal to the full sample") {
    const Dataset d = fixtures::random_guests(600, 3);
    BoolArray all(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) all[i] = true;
    const auto r = subsample_stability_check(d, all, forest_config(60, 2));
    CHECK(r.subgroup_size == d.size());
    for (double x : r.difference) CHECK(x == 0.0);
    CHECK(r.mean_difference == 0.0);
    CHECK(r.test.p_value == 1.0);
  }

  TEST_CASE("stability: contract errors") {
    const Dataset d = fixtures::random_guests(600, 3);
    BoolArray none(d.size());
    CHECK_THROWS_AS(subsample_stability_check(d, none, forest_config(20, 2)), ValidationError);
    BoolArray few(d.size());
    for (std::size_t i = 0; i < 10; ++i) few[i] = true;
    try {
      subsample_stability_check(d, few, forest_config(20, 2));
      FAIL("expected an estimation error");
    } catch (const EstimationError& e) {
      CHECK(std::string(e.what()).find("stability subgroup") == 0);
    }
  }

  TEST_CASE("stability: homogeneous effect, random 70% subgroup") {
    const auto cfg = synth::make_preset(synth::Confounding::kRandomized,
                                        synth::EffectShape::kConstant, 4000, 12);
    const auto pop = synth::generate_population(cfg);
    Rng rng(5);
    BoolArray sub(pop.data.size());
    for (std::size_t i = 0; i < sub.size(); ++i) sub[i] = uniform01(rng) < 0.7;
    const auto r = subsample_stability_check(pop.data, sub, forest_config(300, 6));
    double mean_abs = 0.0;
    for (double x : r.difference) mean_abs += std::abs(x);
    mean_abs /= static_cast<double>(r.difference.size());
    CHECK(mean_abs < 0.05);
  }

  TEST_CASE("stability: subgroup with a distinct effect") {
    const auto cfg = synth::make_preset(synth::Confounding::kRandomized,
                                        synth::EffectShape::kTwoGroup, 2000, 13);
    const auto pop = synth::generate_population(cfg);
    BoolArray women(pop.data.size());
    for (std::size_t i = 0; i < women.size(); ++i) women[i] = pop.data[i].woman.value_or(false);
    const auto r = subsample_stability_check(pop.data, women, forest_config(300, 7));
    CHECK(r.test.p_value < 0.05);
    CHECK(r.mean_difference < 0.0);
  }
}
