#include <cmath>

#include "doctest.h"
#include "modeshift/error.hpp"
#include "modeshift/impact.hpp"
#include "modeshift/rng.hpp"

using namespace modeshift;

TEST_SUITE("impact") {
  TEST_CASE("savings per switcher") {
    CHECK(std::abs(co2_savings_per_switcher(165.8, 187.7, 186.4, 12.4) - 57.2) < 0.05);
    CHECK(co2_savings_per_switcher(100, 100, 50, 50) == 0.0);
    CHECK(co2_savings_per_switcher(100, 100, 200, 10) == doctest::Approx(38.0));
    CHECK(co2_savings_per_switcher(10, 500, 100, 50) < 0.0);
    CHECK_THROWS_AS(co2_savings_per_switcher(-1, 1, 1, 1), ValidationError);
  }

  TEST_CASE("attribution") {
    const double savings = co2_savings_per_switcher(165.8, 187.7, 186.4, 12.4);
    CHECK(std::abs(attribution_summary(0.116, 0.413, savings, 1620).attributed_share - 0.281) <
          0.001);
    CHECK(std::abs(attribution_summary(0.148, 0.413, savings, 1620).attributed_share - 0.358) <
          0.001);
    CHECK(attribution_summary(0.0, 0.413, savings, 1620).attributed_share == 0.0);
    // computed national share, not the rounded 3.6 percent
    CHECK(attribution_summary(0.1, 0.413, savings, 1620).national_share ==
          doctest::Approx(0.0353).epsilon(0.01));
    CHECK_THROWS_AS(attribution_summary(0.1, 0.0, savings, 1620), ValidationError);
    CHECK_THROWS_AS(attribution_summary(0.1, 0.4, savings, 0.0), ValidationError);
  }

  TEST_CASE("property: linearity") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      const double dc = 500 * uniform01(rng), dp = 500 * uniform01(rng);
      const double ec = 300 * uniform01(rng), ep = 50 * uniform01(rng);
      const double k = 0.1 + 3 * uniform01(rng);
      const double base = co2_savings_per_switcher(dc, dp, ec, ep);
      const double both = co2_savings_per_switcher(k * dc, k * dp, ec, ep);
      CHECK(both == doctest::Approx(k * base).epsilon(1e-9).scale(1.0));
      const double shift = co2_savings_per_switcher(dc, dp, ec + 1.0, ep) - base;
      CHECK(shift == doctest::Approx(2.0 * dc / 1000.0).epsilon(1e-9).scale(1.0));
      const double ate = uniform01(rng) * 0.3, up = 0.05 + 0.9 * uniform01(rng);
      const auto a = attribution_summary(ate, up, base, 1620);
      CHECK(attribution_summary(k * ate, up, base, 1620).attributed_share ==
            doctest::Approx(k * a.attributed_share));
      CHECK(attribution_summary(ate, k * up, base, 1620).attributed_share ==
            doctest::Approx(a.attributed_share / k));
    }
  }

  TEST_CASE("config validation") {
    ImpactConfig c;
    CHECK_NOTHROW(validate(c));
    c.uptake_share = 0.0;
    CHECK_THROWS_AS(validate(c), ValidationError);
  }
}
