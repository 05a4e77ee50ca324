#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "modeshift/error.hpp"
#include "modeshift/psm.hpp"

using namespace modeshift;

namespace {

struct Unit {
  const char* id;
  bool treated;
  bool y;
  double score;
};

std::pair<Dataset, std::vector<double>> make(const std::vector<Unit>& units) {
  std::vector<GuestRecord> rs;
  std::vector<double> s;
  for (const auto& u : units) {
    rs.push_back(fixtures::guest(u.id, u.treated, u.y));
    s.push_back(u.score);
  }
  return {Dataset(rs), s};
}

double difference_in_means(const Dataset& d) {
  double st = 0, sc = 0, nt = 0, nc = 0;
  for (const auto& r : d.records()) {
    (r.informed ? st : sc) += r.used_pt;
    (r.informed ? nt : nc) += 1;
  }
  return st / nt - sc / nc;
}

}  // namespace

TEST_SUITE("psm") {
  TEST_CASE("four-unit hand matching") {
    // a -> c (0.1), b -> d (0.1), c -> a, d -> b
    // differences: 1-0, 0-0, 1-0, 0-0
    const auto [d, s] = make({{"a", true, true, 0.6},
                              {"b", true, false, 0.3},
                              {"c", false, false, 0.5},
                              {"d", false, false, 0.2}});
    const auto e = estimate_ate_psm(d, s);
    CHECK(e.estimate == 0.5);
    CHECK(e.method == "psm");
    CHECK(e.n_used == 4);
    CHECK_FALSE(e.standard_error.has_value());
  }

  TEST_CASE("exact distance ties are averaged") {
    // t1 ties with c1, c3 and c2 at distance 0.25: y0 = 2/3, difference 1/3
    // t2 -> c2: 0 - 1; c2 -> t2: 0 - 1; c1 -> t1: 1 - 0; c3 -> t1: 1 - 1
    const auto [d, s] = make({{"t1", true, true, 0.5},
                              {"t2", true, false, 0.875},
                              {"c1", false, false, 0.25},
                              {"c2", false, true, 0.75},
                              {"c3", false, true, 0.25}});
    CHECK(estimate_ate_psm(d, s).estimate == doctest::Approx(-2.0 / 15.0).epsilon(1e-15));
    const auto m = match_nearest(treatment_flags(d), s);
    CHECK(m.matches[0] == std::vector<std::size_t>{2, 3, 4});
    CHECK(m.matches[1] == std::vector<std::size_t>{3});
  }

  TEST_CASE("ten-unit hand matching") {
    // treated t1..t4, controls c1..c6 on a dyadic grid
    const auto [d, s] = make({{"t1", true, true, 0.125},
                              {"t2", true, true, 0.5},
                              {"t3", true, false, 0.625},
                              {"t4", true, true, 0.9375},
                              {"c1", false, false, 0.0625},
                              {"c2", false, true, 0.1875},
                              {"c3", false, false, 0.375},
                              {"c4", false, false, 0.5625},
                              {"c5", false, true, 0.75},
                              {"c6", false, false, 0.875}});
    // t1: c1,c2 tie (0.0625) y0=.5 -> .5 ; t2: c4 (.0625) -> 1 ; t3: c4 (.0625) -> 0 ;
    // t4: c6 (.0625) -> 1 ; c1 -> t1: 1 ; c2 -> t1: 0 ; c3: t2 (.125) -> 1 ;
    // c4: t2,t3 tie -> .5 ; c5: t3 (.125) -> -1 ; c6: t4 (.0625) -> 1
    const double hand = (0.5 + 1 + 0 + 1 + 1 + 0 + 1 + 0.5 - 1 + 1) / 10.0;
    CHECK(estimate_ate_psm(d, s).estimate == doctest::Approx(hand).epsilon(1e-15));
  }

  TEST_CASE("perfect twins give zero") {
    const auto [d, s] = make({{"a", true, true, 0.3},
                              {"b", false, true, 0.3},
                              {"c", true, false, 0.7},
                              {"e", false, false, 0.7}});
    CHECK(estimate_ate_psm(d, s).estimate == 0.0);
  }

  TEST_CASE("contract errors") {
    const auto [d, s] = make({{"a", true, true, 0.3}, {"b", true, false, 0.4}});
    CHECK_THROWS_AS(estimate_ate_psm(d, s), EstimationError);
    const auto [d2, s2] = make({{"a", true, true, 0.0}, {"b", false, false, 0.4}});
    CHECK_THROWS_AS(estimate_ate_psm(d2, s2), ValidationError);
    const auto [d3, s3] = make({{"a", true, true, 0.5}, {"b", false, false, 0.5}});
    BootstrapOptions opts;
    opts.replications = 1;
    CHECK_THROWS_AS(bootstrap_psm(d3, PsmOptions{}, opts), ValidationError);
  }

  TEST_CASE("property: constant scores give the difference in means") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      Dataset d = fixtures::random_guests(10 + seed * 13, seed);
      if (d.treated_count() == 0 || d.control_count() == 0) continue;
      const double c = 0.1 + 0.8 * (static_cast<double>(seed) / 25.0);
      std::vector<double> s(d.size(), c * 0.999);
      CHECK(std::abs(estimate_ate_psm(d, s).estimate - difference_in_means(d)) < 1e-8);
    }
  }

  TEST_CASE("property: record order does not change the estimate") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const Dataset d = fixtures::random_guests(40 + trial * 7, 100 + trial);
      std::vector<double> s(d.size());
      for (auto& x : s) x = 0.05 + 0.9 * uniform01(rng);
      std::vector<std::size_t> perm(d.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<GuestRecord> rs;
      std::vector<double> s2;
      for (auto i : perm) {
        rs.push_back(d[i]);
        s2.push_back(s[i]);
      }
      CHECK(estimate_ate_psm(Dataset(rs), s2).estimate == estimate_ate_psm(d, s).estimate);
    }
  }

  TEST_CASE("bootstrap of a degenerate sample has zero spread") {
    std::vector<GuestRecord> rs;
    for (std::size_t i = 0; i < 40; ++i) {
      auto r = fixtures::guest(fixtures::id_of(i), i % 2 == 0, true);
      r.age = 30.0 + static_cast<double>(i);
      rs.push_back(r);
    }
    PsmOptions psm;
    psm.covariates = {Field::kAge};
    BootstrapOptions opts{50, 3, 1};
    const auto r = bootstrap_psm(Dataset(rs), psm, opts);
    CHECK(r.estimate.estimate == 0.0);
    CHECK(*r.estimate.standard_error == 0.0);
    CHECK(*r.estimate.p_value == 1.0);
  }

  TEST_CASE("bootstrap is identical across runs and worker counts") {
    const Dataset d = fixtures::random_guests(300, 17);
    PsmOptions psm;
    psm.covariates = {Field::kAge, Field::kHotelRatioInformed, Field::kHalfFare};
    const auto a = bootstrap_psm(d, psm, BootstrapOptions{99, 5, 1});
    const auto b = bootstrap_psm(d, psm, BootstrapOptions{99, 5, 4});
    const auto c = bootstrap_psm(d, psm, BootstrapOptions{99, 5, 1});
    CHECK(a.replicates == b.replicates);
    CHECK(a.estimate == b.estimate);
    CHECK(a.estimate == c.estimate);
    CHECK(*a.estimate.seed == 5);
    CHECK(*a.estimate.standard_error > 0.0);
    const auto other = bootstrap_psm(d, psm, BootstrapOptions{99, 6, 1});
    CHECK(other.replicates != a.replicates);
  }

  TEST_CASE("trimming drops exactly the treated units above the control maximum") {
    const auto [d, s] = make({{"t1", true, true, 0.4},
                              {"t2", true, true, 0.81},
                              {"t3", true, false, 0.95},
                              {"t4", true, false, 0.8},
                              {"c1", false, false, 0.8},
                              {"c2", false, true, 0.1}});
    const Dataset trimmed = trim_common_support(d, s);
    REQUIRE(trimmed.filter_log().size() == 1);
    CHECK(trimmed.filter_log()[0].rule == kRuleCommonSupport);
    CHECK(trimmed.filter_log()[0].dropped_ids == std::vector<std::string>{"t2", "t3"});
    std::vector<double> s2;
    for (auto i : common_support_indices(d, s)) s2.push_back(s[i]);
    CHECK(trim_common_support(trimmed, s2) == trimmed);

    const auto [inside, si] = make({{"t1", true, true, 0.4}, {"c1", false, false, 0.8}});
    CHECK(trim_common_support(inside, si).size() == 2);
  }

  TEST_CASE("property: trimming keeps every control and is idempotent") {
    Rng rng(4);
    for (int trial = 0; trial < 40; ++trial) {
      const Dataset d = fixtures::random_guests(5 + uniform_index(rng, 80), 500 + trial);
      if (d.control_count() == 0) continue;
      std::vector<double> s(d.size());
      for (auto& x : s) x = uniform01(rng);
      const auto keep = common_support_indices(d, s);
      std::size_t controls = 0;
      std::vector<double> s2;
      for (auto i : keep) {
        controls += d[i].informed ? 0 : 1;
        s2.push_back(s[i]);
      }
      CHECK(controls == d.control_count());
      const Dataset t = d.retain(keep, "common_support");
      CHECK(common_support_indices(t, s2).size() == t.size());
    }
  }
}
