#include "modeshift/pipeline.hpp"

#include <charconv>
#include <fstream>

#include "modeshift/impact.hpp"
#include "modeshift/imputation.hpp"
#include "modeshift/psm.hpp"
#include "modeshift/rng.hpp"

namespace modeshift {

Dataset prepare_sample(const Dataset& raw, Region control_region, const FilterConfig& filter) {
  return apply_eligibility_filters(select_control_region(raw, control_region), filter)
      .sorted_by_id();
}

BoolArray stability_flags(const Dataset& data, std::string_view spec, std::uint64_t seed) {
  BoolArray flags(data.size());
  if (spec.starts_with("random:")) {
    const std::string_view text = spec.substr(7);
    double fraction = 0.0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), fraction);
    if (ec != std::errc() || p != text.data() + text.size() ||
        !(fraction > 0.0 && fraction <= 1.0)) {
      throw ValidationError("stability subgroup fraction must lie in (0, 1]");
    }
    Rng rng = make_rng(seed, Stream::kSubgroup, 0);
    for (std::size_t i = 0; i < data.size(); ++i) flags[i] = uniform01(rng) < fraction;
  } else if (spec.starts_with("field:")) {
    const auto field = field_from_name(spec.substr(6));
    if (!field || !is_binary(*field)) {
      throw ValidationError("stability subgroup needs a binary field, got '" +
                            std::string(spec.substr(6)) + "'");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      flags[i] = field_value(data[i], *field).value_or(0.0) == 1.0;
    }
  } else {
    throw ValidationError("stability subgroup must be random:<fraction> or field:<name>");
  }
  return flags;
}

namespace {

bool wants_psm(const PipelineConfig& c) { return c.method != MethodSelection::kForest; }
bool wants_forest(const PipelineConfig& c) { return c.method != MethodSelection::kPsm; }

EffectEstimate psm_with_bootstrap(const Dataset& data, const PipelineConfig& c) {
  return bootstrap_inference(data, PsmOptions{},
                             BootstrapOptions{c.bootstrap_replications, c.seed, c.workers});
}

Json impact_json(const PipelineConfig& c, const std::vector<std::pair<std::string, double>>& ates) {
  const double savings =
      co2_savings_per_switcher(c.impact.distance_car_km, c.impact.distance_pt_km,
                               c.impact.emission_car_g_per_pkm, c.impact.emission_pt_g_per_pkm);
  Json attribution = Json::array();
  double national = 0.0;
  for (const auto& [variant, ate] : ates) {
    const auto a =
        attribution_summary(ate, c.impact.uptake_share, savings, c.impact.per_capita_transport_kg);
    national = a.national_share;
    attribution.push_back(
        {{"variant", variant}, {"ate", ate}, {"attributed_share", a.attributed_share}});
  }
  if (ates.empty()) national = savings / c.impact.per_capita_transport_kg;
  return {{"co2_savings_kg_per_switcher", savings},
          {"national_share", national},
          {"uptake_share", c.impact.uptake_share},
          {"attribution", attribution}};
}

// Workers never change results and the input path is run-specific, so
// neither appears in the report.
Json config_json(const PipelineConfig& c) {
  Json j = Json::object();
  for (const auto& [key, value] : config_values(c)) {
    if (key != "workers" && key != "input") j[key] = value;
  }
  return j;
}

}  // namespace

PipelineResult run_pipeline(const Dataset& raw, PipelineConfig c) {
  c.propagate();
  validate(c);
  PipelineResult out;
  Json& report = out.report;
  report["schema_version"] = kReportSchemaVersion;
  report["seed"] = c.seed;
  report["config"] = config_json(c);

  const Dataset sample = run_stage("filter", [&] {
    return prepare_sample(raw, c.control_region, c.filter);
  });
  report["sample"] = drop_log_json(sample, raw.size());

  report["descriptives"] =
      run_stage("describe", [&] { return to_json(summarize_by_treatment(sample)); });

  const PropensityFit propensity =
      run_stage("logit", [&] { return fit_propensity(sample, default_covariates()); });
  report["propensity_model"] = to_json(propensity.model);

  const BoolArray treated = treatment_flags(sample);

  out.overlap = run_stage("overlap", [&] { return overlap_report(propensity.scores, treated); });
  report["overlap"] = to_json(out.overlap);

  Json estimates = Json::array();
  std::vector<std::pair<std::string, double>> ates;
  if (wants_psm(c)) {
    run_stage("psm", [&] {
      const EffectEstimate psm = psm_with_bootstrap(sample, c);
      estimates.push_back(to_json(psm, "psm"));
      ates.emplace_back("psm", psm.estimate);
      if (c.trim) {
        const Dataset trimmed = trim_common_support(sample, propensity.scores);
        estimates.push_back(to_json(psm_with_bootstrap(trimmed, c), "psm_trimmed"));
        report["trimming"] = {{"dropped", sample.size() - trimmed.size()},
                              {"remaining", trimmed.size()}};
      }
    });
  }

  if (wants_forest(c)) {
    run_stage("causal_forest", [&] {
      const CausalForestModel model = fit_causal_forest(sample, c.forest);
      const EffectEstimate ate = estimate_ate_forest(model, sample, TargetSample::kAll);
      const EffectEstimate ato = estimate_ate_forest(model, sample, TargetSample::kOverlap);
      estimates.push_back(to_json(ate, "forest"));
      estimates.push_back(to_json(ato, "forest_overlap"));
      ates.emplace_back("forest", ate.estimate);
      out.cates = model.tau_oob;
      std::size_t positive = 0;
      for (double t : out.cates) positive += t > 0.0 ? 1 : 0;
      const auto [lo, hi] = std::minmax_element(out.cates.begin(), out.cates.end());
      report["forest"] = {
          {"num_trees", c.forest.num_trees},
          {"propensity_clamped", model.propensity_clamp_count()},
          {"cate_mean", stats::mean(out.cates)},
          {"cate_min", *lo},
          {"cate_max", *hi},
          {"cate_share_positive",
           static_cast<double>(positive) / static_cast<double>(out.cates.size())}};
    });
  }

  out.balance = run_stage("balance", [&] {
    const MatchSet matches = match_nearest(treated, propensity.scores);
    const auto weights = matching_weights(treated, matches);
    return balance_table(sample, default_covariates(), std::span<const double>(weights));
  });
  report["balance"] = to_json(out.balance);

  if (wants_forest(c)) {
    report["stability"] = run_stage("stability", [&] {
      const BoolArray subgroup = stability_flags(sample, c.stability_subgroup, c.seed);
      Json j = to_json(subsample_stability_check(sample, subgroup, c.forest));
      j["subgroup"] = c.stability_subgroup;
      return j;
    });
  }

  if (c.impute) {
    run_stage("imputation", [&] {
      FilterConfig keep_missing = c.filter;
      keep_missing.missing_policy = MissingPolicy::kPassThrough;
      const Dataset incomplete = prepare_sample(raw, c.control_region, keep_missing);
      const auto completed = impute_chained(incomplete, c.imputation);
      std::vector<EffectEstimate> psm, forest;
      for (const auto& d : completed) {
        if (wants_psm(c)) psm.push_back(psm_with_bootstrap(d, c));
        if (wants_forest(c)) {
          const auto model = fit_causal_forest(d, c.forest);
          forest.push_back(estimate_ate_forest(model, d, TargetSample::kAll));
        }
      }
      if (completed.size() >= 2) {
        if (!psm.empty()) estimates.push_back(to_json(pool_rubin(psm), "psm_imputed"));
        if (!forest.empty()) estimates.push_back(to_json(pool_rubin(forest), "forest_imputed"));
      } else {
        if (!psm.empty()) estimates.push_back(to_json(psm.front(), "psm_imputed"));
        if (!forest.empty()) estimates.push_back(to_json(forest.front(), "forest_imputed"));
      }
      report["imputation"] = {{"m", c.imputation.imputations},
                              {"rows", incomplete.size()},
                              {"rows_with_missing",
                               std::count_if(incomplete.records().begin(),
                                             incomplete.records().end(),
                                             [](const GuestRecord& r) { return r.has_missing(); })}};
    });
  }

  if (c.alternate_control_region) {
    run_stage("alternate_control_region", [&] {
      const Dataset alt = prepare_sample(raw, *c.alternate_control_region, c.filter);
      if (wants_psm(c)) estimates.push_back(to_json(psm_with_bootstrap(alt, c), "psm_alt_region"));
      if (wants_forest(c)) {
        const auto model = fit_causal_forest(alt, c.forest);
        estimates.push_back(
            to_json(estimate_ate_forest(model, alt, TargetSample::kAll), "forest_alt_region"));
      }
      report["alternate_control_region"] = {
          {"region", region_name(*c.alternate_control_region)},
          {"sample", drop_log_json(alt, raw.size())}};
    });
  }

  report["estimates"] = std::move(estimates);
  report["impact"] = run_stage("impact", [&] { return impact_json(c, ates); });
  return out;
}

void write_outputs(const PipelineResult& result, const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  std::vector<std::pair<fs::path, fs::path>> staged;
  auto stage_file = [&](const std::string& name, auto&& write) {
    const fs::path final_path = directory / name;
    const fs::path temp = directory / ("." + name + ".tmp");
    std::ofstream f(temp, std::ios::binary);
    if (!f) throw Error("cannot write " + temp.string());
    write(f);
    f.close();
    if (!f) throw Error("failed writing " + temp.string());
    staged.emplace_back(temp, final_path);
  };
  try {
    stage_file("report.json", [&](std::ostream& o) { o << dump(result.report); });
    stage_file("balance.csv", [&](std::ostream& o) { write_balance_csv(o, result.balance); });
    stage_file("overlap.svg", [&](std::ostream& o) { write_overlap_svg(o, result.overlap); });
    if (!result.cates.empty()) {
      stage_file("cates.svg", [&](std::ostream& o) { write_cate_svg(o, result.cates); });
    }
  } catch (...) {
    for (const auto& [temp, _] : staged) fs::remove(temp);
    throw;
  }
  for (const auto& [temp, final_path] : staged) fs::rename(temp, final_path);
}

}  // namespace modeshift
