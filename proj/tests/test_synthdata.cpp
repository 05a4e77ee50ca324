#include <cmath>
#include <sstream>

#include "doctest.h"
#include "modeshift/error.hpp"
#include "modeshift/synthdata.hpp"

using namespace modeshift;
using namespace modeshift::synth;

TEST_SUITE("synthdata") {
  TEST_CASE("zero-variance config makes every record identical") {
    DgpConfig c = make_preset(Confounding::kMild, EffectShape::kCalibrated, 2500, 1);
    for (auto& m : c.marginals) {
      m.sd = 0.0;
      if (m.distribution == Distribution::kBernoulli) m.mean = std::round(m.mean);
    }
    c.treatment.intercept = 50.0;
    c.outcome.intercept = 50.0;
    c.offer_use_rate = 1.0;
    const auto pop = generate_population(c);
    auto first = pop.data[0];
    for (const auto& r : pop.data.records()) {
      auto copy = r;
      copy.id = first.id;
      CHECK(copy == first);
    }
  }

  TEST_CASE("calibrated population reproduces the group means") {
    const auto cfg = make_preset(Confounding::kMild, EffectShape::kCalibrated, 100'000, 2);
    const auto pop = generate_population(cfg);
    const auto s = summarize_by_treatment(pop.data);
    for (const auto& row : s.rows) {
      if (row.field != Field::kUsedPt) continue;
      CHECK(std::abs(row.mean_treated - 0.44) < 0.02);
      CHECK(std::abs(row.mean_control - 0.22) < 0.02);
    }
    const double share = static_cast<double>(s.n_treated) / 100'000.0;
    CHECK(std::abs(share - 0.81) < 0.02);
    const auto truth = true_ate(cfg, 1'000'000);
    CHECK(std::abs(truth.value - 0.15) < 0.005);
    CHECK(truth.standard_error < 0.001);
    // every record passes the default eligibility filters
    CHECK(apply_eligibility_filters(pop.data, FilterConfig{}).size() == pop.data.size());
  }

  TEST_CASE("true effect of the presets") {
    auto null_cfg = make_preset(Confounding::kMild, EffectShape::kNull, 10, 3);
    CHECK(std::abs(true_ate(null_cfg).value) < 0.005);
    auto zero = make_preset(Confounding::kMild, EffectShape::kCalibrated, 10, 3);
    zero.treatment_coefficient = 0.0;
    CHECK(true_ate(zero).value == 0.0);
    const auto constant = make_preset(Confounding::kMild, EffectShape::kConstant, 10, 3);
    CHECK(std::abs(true_ate(constant).value - 0.15) < 0.005);
    const auto two = make_preset(Confounding::kMild, EffectShape::kTwoGroup, 10, 3);
    CHECK(std::abs(true_ate(two).value - 0.15) < 0.005);
  }

  TEST_CASE("treatment intercept changes prevalence, not the effect") {
    auto a = make_preset(Confounding::kMild, EffectShape::kCalibrated, 5000, 4);
    auto b = a;
    b.treatment.intercept -= 2.0;
    CHECK(true_ate(a, 200'000).value == true_ate(b, 200'000).value);
    CHECK(generate_population(a).data.treated_count() >
          generate_population(b).data.treated_count());
  }

  TEST_CASE("observed outcome is the potential outcome of the assigned arm") {
    const auto pop =
        generate_population(make_preset(Confounding::kStrong, EffectShape::kCalibrated, 3000, 5));
    for (std::size_t i = 0; i < pop.data.size(); ++i) {
      const auto& r = pop.data[i];
      const auto& o = pop.oracle[i];
      CHECK(r.used_pt == (r.informed ? o.y1 : o.y0));
      CHECK(o.p0 <= o.p1);
      if (r.used_offer) CHECK((r.informed && r.used_pt));
    }
  }

  TEST_CASE("deterministic for a seed and any worker count") {
    auto cfg = make_preset(Confounding::kMild, EffectShape::kCalibrated, 3500, 6);
    cfg.missing_rates = {{Field::kAge, 0.1}};
    cfg.workers = 1;
    const auto a = generate_population(cfg);
    cfg.workers = 4;
    const auto b = generate_population(cfg);
    CHECK(a.data == b.data);
    CHECK(a.sample_ate() == b.sample_ate());
    cfg.seed = 7;
    CHECK(generate_population(cfg).data != a.data);
  }

  TEST_CASE("MCAR masking") {
    const auto pop =
        generate_population(make_preset(Confounding::kMild, EffectShape::kCalibrated, 4000, 8));
    const Dataset m = mask_mcar(pop.data, Field::kCarOwner, 0.2, 8);
    std::size_t blank = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i].car_owner) {
        ++blank;
      } else {
        CHECK(m[i].car_owner == pop.data[i].car_owner);
      }
    }
    CHECK(std::abs(static_cast<double>(blank) / 4000.0 - 0.2) < 0.03);
    CHECK_THROWS_AS(mask_mcar(pop.data, Field::kInformed, 0.2, 8), ValidationError);
  }

  TEST_CASE("oracle sidecar") {
    const auto pop =
        generate_population(make_preset(Confounding::kMild, EffectShape::kConstant, 3, 9));
    std::ostringstream out;
    write_oracle(out, pop);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "id,y0,y1,p0,p1,propensity");
    std::getline(in, line);
    CHECK(line.rfind("g0000001,", 0) == 0);
  }

  TEST_CASE("config validation") {
    auto c = make_preset(Confounding::kMild, EffectShape::kCalibrated, 10, 1);
    c.marginals[1].mean = 1.5;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = make_preset(Confounding::kMild, EffectShape::kCalibrated, 0, 1);
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = make_preset(Confounding::kMild, EffectShape::kCalibrated, 10, 1);
    c.missing_rates = {{Field::kHalfFare, 0.1}};
    CHECK_THROWS_AS(validate(c), ValidationError);
    CHECK(confounding_from_name("strong") == Confounding::kStrong);
    CHECK_FALSE(effect_shape_from_name("bogus").has_value());
  }
}
