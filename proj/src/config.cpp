#include "modeshift/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>

#include "modeshift/error.hpp"

namespace modeshift {

void PipelineConfig::propagate() {
  forest.seed = seed;
  forest.workers = workers;
  imputation.seed = seed;
  imputation.workers = workers;
}

std::optional<MethodSelection> method_from_name(std::string_view name) {
  if (name == "psm") return MethodSelection::kPsm;
  if (name == "forest") return MethodSelection::kForest;
  if (name == "both") return MethodSelection::kBoth;
  return std::nullopt;
}

std::optional<TargetSample> target_from_name(std::string_view name) {
  if (name == "all") return TargetSample::kAll;
  if (name == "overlap") return TargetSample::kOverlap;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ValidationError("config key '" + std::string(key) + "': expected " + expected +
                        ", got '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  bad_value(key, v, "true/false");
}

Region to_region(std::string_view key, std::string_view v) {
  const auto r = region_from_name(v);
  if (!r) bad_value(key, v, "a region name");
  return *r;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string flag(bool v) { return v ? "true" : "false"; }

struct Key {
  const char* name;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

const std::vector<Key>& keys() {
  using C = PipelineConfig;
  using V = std::string_view;
  static const std::vector<Key> table = {
      {"input", [](C& c, V v) { c.input = std::string(v); },
       [](const C& c) { return c.input.string(); }},
      {"seed", [](C& c, V v) { c.seed = to_int<std::uint64_t>("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"workers", [](C& c, V v) { c.workers = to_int<unsigned>("workers", v); },
       [](const C& c) { return std::to_string(c.workers); }},
      {"control_region",
       [](C& c, V v) { c.control_region = to_region("control_region", v); },
       [](const C& c) { return std::string(region_name(c.control_region)); }},
      {"alternate_control_region",
       [](C& c, V v) {
         if (v.empty() || v == "none") {
           c.alternate_control_region.reset();
         } else {
           c.alternate_control_region = to_region("alternate_control_region", v);
         }
       },
       [](const C& c) {
         return c.alternate_control_region ? std::string(region_name(*c.alternate_control_region))
                                           : std::string("none");
       }},
      {"filter.max_distance_km",
       [](C& c, V v) { c.filter.max_distance_km = to_double("filter.max_distance_km", v); },
       [](const C& c) { return number(c.filter.max_distance_km); }},
      {"filter.min_nights",
       [](C& c, V v) { c.filter.min_nights = to_int<int>("filter.min_nights", v); },
       [](const C& c) { return std::to_string(c.filter.min_nights); }},
      {"filter.require_not_aware_at_booking",
       [](C& c, V v) {
         c.filter.require_not_aware_at_booking =
             to_bool("filter.require_not_aware_at_booking", v);
       },
       [](const C& c) { return flag(c.filter.require_not_aware_at_booking); }},
      {"filter.drop_ga", [](C& c, V v) { c.filter.drop_ga = to_bool("filter.drop_ga", v); },
       [](const C& c) { return flag(c.filter.drop_ga); }},
      {"filter.drop_adjusted_stay",
       [](C& c, V v) { c.filter.drop_adjusted_stay = to_bool("filter.drop_adjusted_stay", v); },
       [](const C& c) { return flag(c.filter.drop_adjusted_stay); }},
      {"filter.missing_policy",
       [](C& c, V v) {
         if (v == "complete_case") {
           c.filter.missing_policy = MissingPolicy::kCompleteCase;
         } else if (v == "pass_through") {
           c.filter.missing_policy = MissingPolicy::kPassThrough;
         } else {
           bad_value("filter.missing_policy", v, "complete_case or pass_through");
         }
       },
       [](const C& c) {
         return std::string(c.filter.missing_policy == MissingPolicy::kCompleteCase
                                ? "complete_case"
                                : "pass_through");
       }},
      {"method",
       [](C& c, V v) {
         const auto m = method_from_name(v);
         if (!m) bad_value("method", v, "psm, forest or both");
         c.method = *m;
       },
       [](const C& c) {
         return std::string(c.method == MethodSelection::kPsm      ? "psm"
                            : c.method == MethodSelection::kForest ? "forest"
                                                                   : "both");
       }},
      {"target",
       [](C& c, V v) {
         const auto t = target_from_name(v);
         if (!t) bad_value("target", v, "all or overlap");
         c.target = *t;
       },
       [](const C& c) {
         return std::string(c.target == TargetSample::kAll ? "all" : "overlap");
       }},
      {"trim", [](C& c, V v) { c.trim = to_bool("trim", v); },
       [](const C& c) { return flag(c.trim); }},
      {"bootstrap.replications",
       [](C& c, V v) { c.bootstrap_replications = to_int<int>("bootstrap.replications", v); },
       [](const C& c) { return std::to_string(c.bootstrap_replications); }},
      {"forest.num_trees",
       [](C& c, V v) { c.forest.num_trees = to_int<int>("forest.num_trees", v); },
       [](const C& c) { return std::to_string(c.forest.num_trees); }},
      {"forest.subsample_fraction",
       [](C& c, V v) {
         c.forest.subsample_fraction = to_double("forest.subsample_fraction", v);
       },
       [](const C& c) { return number(c.forest.subsample_fraction); }},
      {"forest.honesty_fraction",
       [](C& c, V v) { c.forest.honesty_fraction = to_double("forest.honesty_fraction", v); },
       [](const C& c) { return number(c.forest.honesty_fraction); }},
      {"forest.min_leaf_size",
       [](C& c, V v) { c.forest.min_leaf_size = to_int<int>("forest.min_leaf_size", v); },
       [](const C& c) { return std::to_string(c.forest.min_leaf_size); }},
      {"forest.mtry", [](C& c, V v) { c.forest.mtry = to_int<int>("forest.mtry", v); },
       [](const C& c) { return std::to_string(c.forest.mtry); }},
      {"stability.subgroup", [](C& c, V v) { c.stability_subgroup = std::string(v); },
       [](const C& c) { return c.stability_subgroup; }},
      {"imputation.enabled", [](C& c, V v) { c.impute = to_bool("imputation.enabled", v); },
       [](const C& c) { return flag(c.impute); }},
      {"imputation.m",
       [](C& c, V v) { c.imputation.imputations = to_int<int>("imputation.m", v); },
       [](const C& c) { return std::to_string(c.imputation.imputations); }},
      {"imputation.donors",
       [](C& c, V v) { c.imputation.donors = to_int<int>("imputation.donors", v); },
       [](const C& c) { return std::to_string(c.imputation.donors); }},
      {"imputation.sweeps",
       [](C& c, V v) { c.imputation.sweeps = to_int<int>("imputation.sweeps", v); },
       [](const C& c) { return std::to_string(c.imputation.sweeps); }},
      {"impact.distance_car_km",
       [](C& c, V v) { c.impact.distance_car_km = to_double("impact.distance_car_km", v); },
       [](const C& c) { return number(c.impact.distance_car_km); }},
      {"impact.distance_pt_km",
       [](C& c, V v) { c.impact.distance_pt_km = to_double("impact.distance_pt_km", v); },
       [](const C& c) { return number(c.impact.distance_pt_km); }},
      {"impact.emission_car_g_per_pkm",
       [](C& c, V v) {
         c.impact.emission_car_g_per_pkm = to_double("impact.emission_car_g_per_pkm", v);
       },
       [](const C& c) { return number(c.impact.emission_car_g_per_pkm); }},
      {"impact.emission_pt_g_per_pkm",
       [](C& c, V v) {
         c.impact.emission_pt_g_per_pkm = to_double("impact.emission_pt_g_per_pkm", v);
       },
       [](const C& c) { return number(c.impact.emission_pt_g_per_pkm); }},
      {"impact.uptake_share",
       [](C& c, V v) { c.impact.uptake_share = to_double("impact.uptake_share", v); },
       [](const C& c) { return number(c.impact.uptake_share); }},
      {"impact.per_capita_transport_kg",
       [](C& c, V v) {
         c.impact.per_capita_transport_kg = to_double("impact.per_capita_transport_kg", v);
       },
       [](const C& c) { return number(c.impact.per_capita_transport_kg); }},
  };
  return table;
}

}  // namespace

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(config, trim(value));
      return;
    }
  }
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> config_values(const PipelineConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(number) + ": expected key = value");
    }
    try {
      set_config_value(config, trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  validate(config);
  return config;
}

void validate(const PipelineConfig& config) {
  validate(config.filter);
  validate(config.forest);
  validate(config.imputation);
  validate(config.impact);
  if (config.bootstrap_replications < 2) {
    throw ValidationError("bootstrap.replications must be at least 2");
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace modeshift
