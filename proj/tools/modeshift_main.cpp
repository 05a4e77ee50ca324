// modeshift: command-line front end for the mode-shift evaluation pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "modeshift/causal_forest.hpp"
#include "modeshift/config.hpp"
#include "modeshift/diagnostics.hpp"
#include "modeshift/error.hpp"
#include "modeshift/impact.hpp"
#include "modeshift/imputation.hpp"
#include "modeshift/pipeline.hpp"
#include "modeshift/psm.hpp"
#include "modeshift/report.hpp"
#include "modeshift/synthdata.hpp"

using namespace modeshift;

namespace {

struct Common {
  std::string config_path;
  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string method;
  std::string target;
  std::optional<bool> trim;
  bool impute = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_input = true) {
  cmd->add_option("--config", c.config_path, "key = value configuration file");
  if (needs_input) cmd->add_option("--input", c.input, "guest survey CSV");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--workers", c.workers, "worker threads (0 = all cores); never changes results");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (!c.input.empty()) cfg.input = c.input;
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  if (!c.method.empty()) set_config_value(cfg, "method", c.method);
  if (!c.target.empty()) set_config_value(cfg, "target", c.target);
  if (c.trim) cfg.trim = *c.trim;
  if (c.impute) cfg.impute = true;
  validate(cfg);
  cfg.propagate();
  return cfg;
}

Dataset read_input(const PipelineConfig& cfg) {
  if (cfg.input.empty()) throw ValidationError("no input CSV given (--input or config key input)");
  return run_stage("load", [&] { return load_dataset(cfg.input); });
}

Dataset read_sample(const PipelineConfig& cfg) {
  const Dataset raw = read_input(cfg);
  return run_stage("filter", [&] { return prepare_sample(raw, cfg.control_region, cfg.filter); });
}

// Writes to `path`, or stdout when it is empty.
template <typename Write>
void emit(const std::string& path, Write&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  write(f);
}

EffectEstimate psm_estimate(const Dataset& d, const PipelineConfig& cfg) {
  return bootstrap_inference(d, PsmOptions{},
                             BootstrapOptions{cfg.bootstrap_replications, cfg.seed, cfg.workers});
}

int cmd_filter(const Common& c) {
  const PipelineConfig cfg = resolve(c);
  const Dataset raw = read_input(cfg);
  const Dataset sample = prepare_sample(raw, cfg.control_region, cfg.filter);
  emit(c.out, [&](std::ostream& o) { write_dataset(o, sample); });
  std::cerr << dump(drop_log_json(sample, raw.size()));
  return 0;
}

int cmd_describe(const Common& c) {
  const Dataset sample = read_sample(resolve(c));
  const Json j = run_stage("describe", [&] { return to_json(summarize_by_treatment(sample)); });
  emit(c.out, [&](std::ostream& o) { o << dump(j); });
  return 0;
}

int cmd_estimate(const Common& c, const std::string& model_in, const std::string& model_out) {
  const PipelineConfig cfg = resolve(c);
  std::vector<Dataset> samples;
  if (cfg.impute) {
    if (!model_in.empty() || !model_out.empty()) {
      throw ValidationError("--model-in/--model-out cannot be combined with --impute");
    }
    PipelineConfig keep_missing = cfg;
    keep_missing.filter.missing_policy = MissingPolicy::kPassThrough;
    const Dataset incomplete = read_sample(keep_missing);
    samples = run_stage("imputation", [&] { return impute_chained(incomplete, cfg.imputation); });
  } else {
    samples.push_back(read_sample(cfg));
  }
  // Trimming is opt-in here; `run` reports both variants.
  if (c.trim.value_or(false)) {
    for (auto& d : samples) {
      const auto fit = run_stage("logit", [&] { return fit_propensity(d, default_covariates()); });
      d = trim_common_support(d, fit.scores);
    }
  }

  std::vector<EffectEstimate> psm, forest;
  for (const auto& d : samples) {
    if (cfg.method != MethodSelection::kForest) {
      psm.push_back(run_stage("psm", [&] { return psm_estimate(d, cfg); }));
    }
    if (cfg.method != MethodSelection::kPsm) {
      forest.push_back(run_stage("causal_forest", [&] {
        const CausalForestModel model =
            model_in.empty() ? fit_causal_forest(d, cfg.forest) : load_model(model_in);
        if (!model_out.empty()) save_model(model, model_out);
        return estimate_ate_forest(model, d, cfg.target);
      }));
    }
  }
  const std::string forest_variant = cfg.target == TargetSample::kAll ? "forest" : "forest_overlap";
  Json estimates = Json::array();
  if (!psm.empty()) {
    estimates.push_back(psm.size() > 1 ? to_json(pool_rubin(psm), "psm_imputed")
                                       : to_json(psm.front(), "psm"));
  }
  if (!forest.empty()) {
    estimates.push_back(forest.size() > 1 ? to_json(pool_rubin(forest), forest_variant + "_imputed")
                                          : to_json(forest.front(), forest_variant));
  }
  emit(c.out, [&](std::ostream& o) { o << dump(estimates); });
  return 0;
}

int cmd_balance(const Common& c) {
  const Dataset sample = read_sample(resolve(c));
  const auto fit = run_stage("logit", [&] { return fit_propensity(sample, default_covariates()); });
  const BoolArray treated = treatment_flags(sample);
  const auto rows = run_stage("balance", [&] {
    const auto weights = matching_weights(treated, match_nearest(treated, fit.scores));
    return balance_table(sample, default_covariates(), std::span<const double>(weights));
  });
  emit(c.out, [&](std::ostream& o) { write_balance_csv(o, rows); });
  return 0;
}

int cmd_overlap(const Common& c, const std::string& svg) {
  const Dataset sample = read_sample(resolve(c));
  const auto fit = run_stage("logit", [&] { return fit_propensity(sample, default_covariates()); });
  const auto report = overlap_report(fit.scores, treatment_flags(sample));
  emit(c.out, [&](std::ostream& o) { o << dump(to_json(report)); });
  if (!svg.empty()) emit(svg, [&](std::ostream& o) { write_overlap_svg(o, report); });
  return 0;
}

int cmd_stability(const Common& c, const std::string& subgroup) {
  PipelineConfig cfg = resolve(c);
  if (!subgroup.empty()) cfg.stability_subgroup = subgroup;
  const Dataset sample = read_sample(cfg);
  const Json j = run_stage("stability", [&] {
    const BoolArray flags = stability_flags(sample, cfg.stability_subgroup, cfg.seed);
    return to_json(subsample_stability_check(sample, flags, cfg.forest));
  });
  emit(c.out, [&](std::ostream& o) { o << dump(j); });
  return 0;
}

int cmd_impute(const Common& c) {
  PipelineConfig cfg = resolve(c);
  if (c.out.empty()) throw ValidationError("impute needs --out <directory>");
  cfg.filter.missing_policy = MissingPolicy::kPassThrough;
  const Dataset sample = read_sample(cfg);
  const auto completed = run_stage("imputation", [&] { return impute_chained(sample, cfg.imputation); });
  std::filesystem::create_directories(c.out);
  for (std::size_t k = 0; k < completed.size(); ++k) {
    save_dataset(std::filesystem::path(c.out) / ("imputed_" + std::to_string(k + 1) + ".csv"),
                 completed[k]);
  }
  return 0;
}

struct SimulateArgs {
  std::string confounding = "mild";
  std::string shape = "calibrated";
  std::size_t n = 4000;
  std::uint64_t seed = 0;
  std::string oracle;
  double missing_rate = 0.0;
  double alternate_share = 0.0;
};

int cmd_simulate(const SimulateArgs& a, const std::string& out, std::optional<unsigned> workers) {
  const auto confounding = synth::confounding_from_name(a.confounding);
  if (!confounding) throw ValidationError("unknown confounding preset '" + a.confounding + "'");
  const auto shape = synth::effect_shape_from_name(a.shape);
  if (!shape) throw ValidationError("unknown effect shape '" + a.shape + "'");
  synth::DgpConfig cfg = synth::make_preset(*confounding, *shape, a.n, a.seed);
  if (workers) cfg.workers = *workers;
  cfg.alternate_region_share = a.alternate_share;
  if (a.missing_rate > 0.0) {
    for (Field f : nullable_fields()) cfg.missing_rates.emplace_back(f, a.missing_rate);
  }
  const auto population = synth::generate_population(cfg);
  emit(out, [&](std::ostream& o) { write_dataset(o, population.data); });
  if (!a.oracle.empty()) {
    emit(a.oracle, [&](std::ostream& o) { synth::write_oracle(o, population); });
  }
  return 0;
}

int cmd_impact(const Common& c, const std::vector<double>& ates) {
  const PipelineConfig cfg = resolve(c);
  const auto& k = cfg.impact;
  const double savings = co2_savings_per_switcher(k.distance_car_km, k.distance_pt_km,
                                                  k.emission_car_g_per_pkm, k.emission_pt_g_per_pkm);
  Json j;
  j["co2_savings_kg_per_switcher"] = savings;
  j["national_share"] = savings / k.per_capita_transport_kg;
  Json rows = Json::array();
  for (double ate : ates) {
    const auto a = attribution_summary(ate, k.uptake_share, savings, k.per_capita_transport_kg);
    rows.push_back({{"ate", ate}, {"attributed_share", a.attributed_share}});
  }
  j["attribution"] = rows;
  emit(c.out, [&](std::ostream& o) { o << dump(j); });
  return 0;
}

int cmd_run(const Common& c) {
  if (c.out.empty()) throw ValidationError("run needs --out <directory>");
  const PipelineConfig cfg = resolve(c);
  const Dataset raw = read_input(cfg);
  const PipelineResult result = run_pipeline(raw, cfg);
  write_outputs(result, c.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate the mode-shift effect of informing hotel guests about a free "
               "public-transport arrival offer."};
  app.require_subcommand(1);

  Common common;
  std::string model_in, model_out, overlap_svg, subgroup;
  std::vector<double> ates;
  SimulateArgs sim;

  auto* filter = app.add_subcommand("filter", "apply region selection and eligibility filters");
  add_common(filter, common);
  filter->add_option("--out", common.out, "filtered CSV (stdout if omitted)");

  auto* describe = app.add_subcommand("describe", "group means and standard deviations");
  add_common(describe, common);
  describe->add_option("--out", common.out, "JSON output (stdout if omitted)");

  auto* estimate = app.add_subcommand("estimate", "PSM and/or causal forest effect estimates");
  add_common(estimate, common);
  estimate->add_option("--out", common.out, "JSON output (stdout if omitted)");
  estimate->add_option("--method", common.method, "psm, forest or both");
  estimate->add_option("--target", common.target, "all (ATE) or overlap (ATO)");
  estimate->add_flag("--trim,!--no-trim", common.trim, "drop treated units above the control support");
  estimate->add_flag("--impute", common.impute, "estimate on each imputed completion and pool");
  estimate->add_option("--model-in", model_in, "reuse a saved causal forest");
  estimate->add_option("--model-out", model_out, "save the fitted causal forest");

  auto* balance = app.add_subcommand("balance", "balance table before and after matching");
  add_common(balance, common);
  balance->add_option("--out", common.out, "CSV output (stdout if omitted)");

  auto* overlap = app.add_subcommand("overlap", "propensity score overlap report");
  add_common(overlap, common);
  overlap->add_option("--out", common.out, "JSON output (stdout if omitted)");
  overlap->add_option("--svg", overlap_svg, "histogram SVG");

  auto* stability = app.add_subcommand("stability", "full-sample vs subgroup forest CATEs");
  add_common(stability, common);
  stability->add_option("--out", common.out, "JSON output (stdout if omitted)");
  stability->add_option("--subgroup", subgroup, "random:<fraction> or field:<binary field>");

  auto* impute = app.add_subcommand("impute", "multiple imputation by chained equations");
  add_common(impute, common);
  impute->add_option("--out", common.out, "directory for imputed_<k>.csv")->required();

  auto* simulate = app.add_subcommand("simulate", "synthetic guests with known potential outcomes");
  simulate->add_option("--confounding", sim.confounding, "randomized, mild or strong");
  simulate->add_option("--shape", sim.shape, "calibrated, constant, two_group or null");
  simulate->add_option("--n", sim.n, "population size");
  simulate->add_option("--seed", sim.seed, "seed");
  simulate->add_option("--workers", common.workers, "worker threads");
  simulate->add_option("--out", common.out, "CSV output (stdout if omitted)");
  simulate->add_option("--oracle", sim.oracle, "sidecar CSV with y0, y1, p0, p1, propensity");
  simulate->add_option("--missing-rate", sim.missing_rate, "MCAR rate for each nullable field");
  simulate->add_option("--alternate-share", sim.alternate_share,
                       "share of uninformed guests in the alternative control region");

  auto* impact = app.add_subcommand("impact", "CO2 savings and attribution");
  add_common(impact, common, false);
  impact->add_option("--ate", ates, "effect estimate(s) to attribute");
  impact->add_option("--out", common.out, "JSON output (stdout if omitted)");

  auto* run = app.add_subcommand("run", "full pipeline to report.json and plots");
  add_common(run, common);
  run->add_option("--out", common.out, "output directory")->required();
  run->add_option("--method", common.method, "psm, forest or both");
  run->add_flag("--trim,!--no-trim", common.trim, "also report the trimmed PSM estimate");
  run->add_flag("--impute", common.impute, "add the multiple-imputation branch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (filter->parsed()) return cmd_filter(common);
    if (describe->parsed()) return cmd_describe(common);
    if (estimate->parsed()) return cmd_estimate(common, model_in, model_out);
    if (balance->parsed()) return cmd_balance(common);
    if (overlap->parsed()) return cmd_overlap(common, overlap_svg);
    if (stability->parsed()) return cmd_stability(common, subgroup);
    if (impute->parsed()) return cmd_impute(common);
    if (simulate->parsed()) return cmd_simulate(sim, common.out, common.workers);
    if (impact->parsed()) return cmd_impact(common, ates);
    if (run->parsed()) return cmd_run(common);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
