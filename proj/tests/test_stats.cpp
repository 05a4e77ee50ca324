#include <cmath>
#include <vector>

#include "doctest.h"
#include "modeshift/rng.hpp"
#include "modeshift/stats.hpp"

using namespace modeshift;
using namespace modeshift::stats;

TEST_SUITE("stats") {
  TEST_CASE("welch on a 5-vs-5 fixture") {
    const std::vector<double> a{2.1, 3.4, 1.9, 5.0, 4.2};
    const std::vector<double> b{1.0, 0.7, 2.2, 1.5, 0.9};
    const auto r = welch_t_test(moments(a), moments(b));
    CHECK(r.statistic == doctest::Approx(3.1488018786560765).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(5.568752435781994).epsilon(1e-12));
    CHECK(std::abs(r.p_value - 0.02194438166237112) < 1e-6);
  }

  TEST_CASE("welch on identical groups") {
    const std::vector<double> a{1, 2, 3, 4};
    const auto r = welch_t_test(moments(a), moments(a));
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0));
  }

  TEST_CASE("paired t-test") {
    const std::vector<double> d{0.3, -0.1, 0.25, 0.4, 0.05, 0.2};
    const auto r = paired_t_test(d);
    CHECK(r.statistic == doctest::Approx(2.4846467329894417).epsilon(1e-12));
    CHECK(std::abs(r.p_value - 0.05552398120107949) < 1e-9);
    const std::vector<double> zeros(10, 0.0);
    CHECK(paired_t_test(zeros).p_value == 1.0);
  }

  TEST_CASE("normal and t tails") {
    CHECK(two_sided_normal_p(1.96) == doctest::Approx(0.04999579029644087).epsilon(1e-12));
    CHECK(two_sided_t_p(2.5, 7) == doctest::Approx(0.040992218585752874).epsilon(1e-10));
    CHECK(normal_p_value(0.0, 0.0) == 1.0);
    CHECK(normal_p_value(0.1, 0.0) == 0.0);
  }

  TEST_CASE("property: equal weights reduce to plain moments") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + uniform_index(rng, 30);
      std::vector<double> v(n), w(n, 0.5 + uniform01(rng));
      for (auto& x : v) x = standard_normal(rng) * 3.0;
      const auto a = moments(v);
      const auto b = weighted_moments(v, w);
      CHECK(b.mean == doctest::Approx(a.mean).epsilon(1e-12));
      CHECK(b.variance == doctest::Approx(a.variance).epsilon(1e-10));
      CHECK(b.n == doctest::Approx(a.n).epsilon(1e-12));
    }
  }

  TEST_CASE("property: welch p is shift invariant") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t na = 2 + uniform_index(rng, 20), nb = 2 + uniform_index(rng, 20);
      std::vector<double> a(na), b(nb);
      for (auto& x : a) x = standard_normal(rng);
      for (auto& x : b) x = standard_normal(rng) + 0.3;
      const double shift = 100.0 * (uniform01(rng) - 0.5);
      auto a2 = a, b2 = b;
      for (auto& x : a2) x += shift;
      for (auto& x : b2) x += shift;
      const double p1 = welch_t_test(moments(a), moments(b)).p_value;
      const double p2 = welch_t_test(moments(a2), moments(b2)).p_value;
      CHECK(p1 >= 0.0);
      CHECK(p1 <= 1.0);
      CHECK(std::abs(p1 - p2) < 1e-9);
    }
  }
}
