#include "modeshift/report.hpp"

#include <algorithm>
#include <cmath>

namespace modeshift {

namespace {

Json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace

Json to_json(const EffectEstimate& e, std::string_view variant) {
  Json j;
  j["variant"] = variant;
  j["method"] = e.method;
  j["estimand"] = estimand_name(e.estimand);
  j["estimate"] = e.estimate;
  j["standard_error"] = optional_number(e.standard_error);
  j["p_value"] = optional_number(e.p_value);
  if (const auto ci = e.confidence_interval(0.95)) {
    j["ci95"] = {ci->first, ci->second};
  } else {
    j["ci95"] = nullptr;
  }
  j["n_used"] = e.n_used;
  j["seed"] = e.seed ? Json(*e.seed) : Json(nullptr);
  return j;
}

Json to_json(const TreatmentSummary& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"field", field_name(r.field)},
                    {"mean_treated", r.mean_treated},
                    {"sd_treated", optional_number(r.sd_treated)},
                    {"n_treated", r.n_treated},
                    {"mean_control", r.mean_control},
                    {"sd_control", optional_number(r.sd_control)},
                    {"n_control", r.n_control}});
  }
  return {{"n_treated", s.n_treated}, {"n_control", s.n_control}, {"fields", rows}};
}

Json to_json(const LogitModel& m) {
  Json coefficients;
  coefficients["intercept"] = m.coefficients(0);
  for (std::size_t k = 0; k < m.covariate_names.size(); ++k) {
    coefficients[m.covariate_names[k]] = m.coefficients(static_cast<Eigen::Index>(k) + 1);
  }
  return {{"converged", m.converged},
          {"iterations", m.iterations},
          {"log_likelihood", m.log_likelihood},
          {"coefficients", coefficients}};
}

Json to_json(const std::vector<BalanceRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"covariate", field_name(r.field)},
                   {"mean_treated_before", r.mean_treated_before},
                   {"mean_control_before", r.mean_control_before},
                   {"smd_before", optional_number(r.smd_before)},
                   {"p_before", optional_number(r.p_before)},
                   {"mean_treated_after", optional_number(r.mean_treated_after)},
                   {"mean_control_after", optional_number(r.mean_control_after)},
                   {"smd_after", optional_number(r.smd_after)},
                   {"p_after", optional_number(r.p_after)},
                   {"smd_undefined", r.smd_undefined}});
  }
  return out;
}

Json to_json(const OverlapReport& r) {
  Json bins = Json::array();
  for (const auto& b : r.bins) {
    bins.push_back({{"lower", b.lower},
                    {"upper", b.upper},
                    {"treated", b.treated},
                    {"control", b.control},
                    {"single_group", b.single_group()}});
  }
  return {{"min_treated", optional_number(r.min_treated)},
          {"max_treated", optional_number(r.max_treated)},
          {"min_control", optional_number(r.min_control)},
          {"max_control", optional_number(r.max_control)},
          {"boundary_scores", r.boundary_scores},
          {"single_group_bins", r.single_group_bins},
          {"bins", bins}};
}

Json to_json(const StabilityResult& r) {
  double mean_abs = 0.0;
  for (double d : r.difference) mean_abs += std::abs(d);
  if (!r.difference.empty()) mean_abs /= static_cast<double>(r.difference.size());
  return {{"subgroup_size", r.subgroup_size},
          {"records", r.difference.size()},
          {"mean_difference", r.mean_difference},
          {"mean_abs_difference", mean_abs},
          {"t_statistic", optional_number(r.test.statistic)},
          {"df", r.test.df},
          {"p_value", optional_number(r.test.p_value)}};
}

Json drop_log_json(const Dataset& analysis, std::size_t input_rows) {
  Json rules = Json::array();
  for (const auto& entry : analysis.filter_log()) {
    rules.push_back({{"rule", entry.rule},
                     {"count", entry.dropped_ids.size()},
                     {"ids", entry.dropped_ids}});
  }
  return {{"input_rows", input_rows},
          {"dropped", analysis.total_dropped()},
          {"analysis_rows", analysis.size()},
          {"rules", rules}};
}

std::string dump(const Json& value) { return value.dump(2) + "\n"; }

}  // namespace modeshift
