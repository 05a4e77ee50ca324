#include "modeshift/causal_forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "json.hpp"
#include "modeshift/error.hpp"
#include "modeshift/parallel.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/stats.hpp"

namespace modeshift {

using nlohmann::json;

void validate(const ForestConfig& c) {
  if (c.num_trees < 1) throw ValidationError("num_trees must be at least 1");
  if (!(c.subsample_fraction > 0.0 && c.subsample_fraction < 1.0)) {
    throw ValidationError("subsample_fraction must lie in (0, 1)");
  }
  if (!(c.honesty_fraction > 0.0 && c.honesty_fraction < 1.0)) {
    throw ValidationError("honesty_fraction must lie in (0, 1)");
  }
  if (c.min_leaf_size < 1) throw ValidationError("min_leaf_size must be at least 1");
  if (c.mtry < 0) throw ValidationError("mtry must be nonnegative");
}

int effective_mtry(const ForestConfig& config, std::size_t num_covariates) {
  const int p = static_cast<int>(num_covariates);
  if (config.mtry > 0) return std::min(config.mtry, p);
  return std::min(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p)) + 20.0)), p);
}

int nuisance_tree_count(const ForestConfig& config) {
  return std::max(50, config.num_trees / 4);
}

std::size_t CausalForestModel::propensity_clamp_count() const {
  return static_cast<std::size_t>(std::count_if(
      propensity_hat.begin(), propensity_hat.end(),
      [](double e) { return e < kPropensityFloor || e > kPropensityCeiling; }));
}

std::optional<std::size_t> CausalForestModel::training_index(const std::string& id) const {
  auto it = std::lower_bound(training_ids.begin(), training_ids.end(), id);
  if (it == training_ids.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - training_ids.begin());
}

CausalForestModel fit_causal_forest(const Dataset& data, const ForestConfig& config,
                                    const CausalFitOptions& options) {
  validate(config);
  if (options.covariates.empty()) throw ValidationError("forest needs at least one covariate");
  if (data.treated_count() == 0) throw EstimationError("no treated records to train on");
  if (data.control_count() == 0) throw EstimationError("no control records to train on");
  const double per_tree = static_cast<double>(data.size()) * config.subsample_fraction;
  if (per_tree < 4.0 * config.min_leaf_size) {
    throw EstimationError("too few records for one subsample: " + std::to_string(data.size()) +
                          " x " + std::to_string(config.subsample_fraction) + " < 4 x " +
                          std::to_string(config.min_leaf_size));
  }

  // Canonical id order keeps the fit independent of record order.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });
  std::vector<GuestRecord> sorted_records;
  sorted_records.reserve(data.size());
  for (std::size_t i : order) sorted_records.push_back(data[i]);
  const Dataset sorted(std::move(sorted_records));

  CausalForestModel model;
  model.config = config;
  model.covariates = options.covariates;
  const Eigen::MatrixXd x = covariate_matrix(sorted, options.covariates);
  const std::size_t n = sorted.size();
  for (const auto& r : sorted.records()) {
    model.training_ids.push_back(r.id);
    model.outcome.push_back(r.used_pt);
    model.treatment.push_back(r.informed);
  }

  const int mtry = effective_mtry(config, options.covariates.size());
  forest::ForestParams nuisance;
  nuisance.num_trees = nuisance_tree_count(config);
  nuisance.subsample_fraction = config.subsample_fraction;
  nuisance.honesty_fraction = config.honesty_fraction;
  nuisance.tree = {config.min_leaf_size, mtry, forest::SplitRule::kRegression};

  forest::TrainingView y_view{&x, model.outcome, {}, {}};
  model.outcome_hat =
      forest::regression_oob(y_view, nuisance, config.seed, Stream::kOutcomeForest, config.workers);

  if (options.known_propensity) {
    const auto& known = *options.known_propensity;
    if (known.size() != data.size()) {
      throw ValidationError("known propensity needs one value per record");
    }
    model.propensity_hat.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double e = known[order[k]];
      if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("known propensity outside [0, 1]");
      model.propensity_hat[k] = e;
    }
  } else {
    forest::TrainingView w_view{&x, model.treatment, {}, {}};
    model.propensity_hat = forest::regression_oob(w_view, nuisance, config.seed,
                                                  Stream::kTreatmentForest, config.workers);
  }

  std::vector<double> y_centered(n), w_centered(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_centered[i] = model.outcome[i] - model.outcome_hat[i];
    w_centered[i] = model.treatment[i] - model.propensity_hat[i];
  }

  forest::ForestParams causal = nuisance;
  causal.num_trees = config.num_trees;
  causal.tree.rule = forest::SplitRule::kCausal;
  forest::TrainingView view{&x, y_centered, w_centered, model.treatment};
  forest::GrownForest grown =
      forest::grow_forest(view, causal, config.seed, Stream::kCausalForest, config.workers);

  model.tau_oob.resize(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    auto row = [&](int f) { return x(static_cast<Eigen::Index>(i), f); };
    forest::EffectAccumulator oob, all;
    for (std::size_t b = 0; b < grown.trees.size(); ++b) {
      const auto& tree = grown.trees[b];
      if (!tree.usable) continue;
      const auto& stats = tree.leaf_for(row).stats;
      all.add(stats);
      if (!grown.in_bag[b][i]) oob.add(stats);
    }
    double tau = oob.effect();
    if (std::isnan(tau)) tau = all.effect();
    model.tau_oob[i] = std::isnan(tau) ? 0.0 : tau;
  });
  model.trees = std::move(grown.trees);
  return model;
}

double predict_cate(const CausalForestModel& model, std::span<const double> row) {
  if (row.size() != model.covariates.size()) {
    throw ValidationError("row has " + std::to_string(row.size()) + " covariates, model expects " +
                          std::to_string(model.covariates.size()));
  }
  forest::EffectAccumulator acc;
  auto value = [&](int f) { return row[static_cast<std::size_t>(f)]; };
  for (const auto& tree : model.trees) {
    if (tree.usable) acc.add(tree.leaf_for(value).stats);
  }
  const double tau = acc.effect();
  return std::isnan(tau) ? 0.0 : tau;
}

std::vector<double> predict_cate(const CausalForestModel& model, const Dataset& data) {
  std::vector<double> out(data.size());
  std::vector<double> row(model.covariates.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (auto idx = model.training_index(data[i].id)) {
      out[i] = model.tau_oob[*idx];
      continue;
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto v = field_value(data[i], model.covariates[j]);
      if (!v) {
        throw EstimationError("record '" + data[i].id + "' is missing '" +
                              std::string(field_name(model.covariates[j])) + "'");
      }
      row[j] = *v;
    }
    out[i] = predict_cate(model, row);
  }
  return out;
}

std::vector<double> doubly_robust_scores(const CausalForestModel& model) {
  const std::size_t n = model.training_ids.size();
  std::vector<double> gamma(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::clamp(model.propensity_hat[i], kPropensityFloor, kPropensityCeiling);
    const double w = model.treatment[i];
    const double tau = model.tau_oob[i];
    const double residual = model.outcome[i] - model.outcome_hat[i] -
                            (w - model.propensity_hat[i]) * tau;
    gamma[i] = tau + (w - e) / (e * (1.0 - e)) * residual;
  }
  return gamma;
}

EffectEstimate estimate_ate_forest(const CausalForestModel& model, const Dataset& data,
                                   TargetSample target) {
  if (data.empty()) throw EstimationError("empty dataset");
  if (data.size() != model.training_ids.size()) {
    throw ValidationError("dataset is not the forest's training sample");
  }
  for (const auto& r : data.records()) {
    if (!model.training_index(r.id)) {
      throw ValidationError("record '" + r.id + "' was not in the forest's training sample");
    }
  }
  const auto gamma = doubly_robust_scores(model);
  const std::size_t n = gamma.size();
  const double nd = static_cast<double>(n);

  EffectEstimate est;
  est.method = "causal_forest";
  est.n_used = n;
  est.seed = model.config.seed;
  if (target == TargetSample::kAll) {
    est.estimand = Estimand::kAte;
    est.estimate = stats::mean(gamma);
    const double sd = n > 1 ? stats::sample_sd(gamma) : 0.0;
    est.set_standard_error(sd / std::sqrt(nd));
    return est;
  }
  est.estimand = Estimand::kAto;
  std::vector<double> weight(n);
  double sum_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::clamp(model.propensity_hat[i], kPropensityFloor, kPropensityCeiling);
    weight[i] = e * (1.0 - e);
    sum_w += weight[i];
  }
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) weighted += weight[i] * gamma[i];
  est.estimate = weighted / sum_w;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss += weight[i] * weight[i] * (gamma[i] - est.estimate) * (gamma[i] - est.estimate);
  }
  const double correction = n > 1 ? nd / (nd - 1.0) : 0.0;
  est.set_standard_error(std::sqrt(correction * ss) / sum_w);
  return est;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kFormatName = "modeshift.causal_forest";

json tree_to_json(const forest::Tree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), stats = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    if (n.is_leaf()) {
      stats.push_back({n.stats.count, n.stats.n_treated, n.stats.sum_w, n.stats.sum_y,
                       n.stats.sum_wy, n.stats.sum_ww});
    } else {
      stats.push_back(nullptr);
    }
  }
  return {{"usable", tree.usable}, {"feature", feature}, {"threshold", threshold},
          {"left", left},          {"right", right},     {"stats", stats}};
}

forest::Tree tree_from_json(const json& j) {
  forest::Tree tree;
  tree.usable = j.at("usable").get<bool>();
  const auto& feature = j.at("feature");
  const std::size_t count = feature.size();
  tree.nodes.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto& n = tree.nodes[k];
    n.feature = feature[k].get<int>();
    n.threshold = j.at("threshold")[k].get<double>();
    n.left = j.at("left")[k].get<int>();
    n.right = j.at("right")[k].get<int>();
    const auto& s = j.at("stats")[k];
    if (!s.is_null()) {
      n.stats = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>(),
                 s[3].get<double>(), s[4].get<double>(), s[5].get<double>()};
    }
  }
  return tree;
}

}  // namespace

void save_model(const CausalForestModel& model, std::ostream& out) {
  json j;
  j["format"] = kFormatName;
  j["version"] = kModelFormatVersion;
  const auto& c = model.config;
  j["config"] = {{"num_trees", c.num_trees},
                 {"subsample_fraction", c.subsample_fraction},
                 {"honesty_fraction", c.honesty_fraction},
                 {"min_leaf_size", c.min_leaf_size},
                 {"mtry", c.mtry},
                 {"seed", c.seed}};
  j["covariates"] = field_names(model.covariates);
  json trees = json::array();
  for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  j["training"] = {{"ids", model.training_ids},
                   {"outcome", model.outcome},
                   {"treatment", model.treatment},
                   {"outcome_hat", model.outcome_hat},
                   {"propensity_hat", model.propensity_hat},
                   {"tau_oob", model.tau_oob}};
  const auto bytes = json::to_cbor(j);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write model");
}

CausalForestModel load_model(std::istream& in) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::from_cbor(bytes);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file is not valid CBOR: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormatName) {
      throw ValidationError("not a causal forest model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ValidationError("unsupported model version " + std::to_string(version));
    }
    CausalForestModel model;
    const auto& c = j.at("config");
    model.config.num_trees = c.at("num_trees").get<int>();
    model.config.subsample_fraction = c.at("subsample_fraction").get<double>();
    model.config.honesty_fraction = c.at("honesty_fraction").get<double>();
    model.config.min_leaf_size = c.at("min_leaf_size").get<int>();
    model.config.mtry = c.at("mtry").get<int>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& name : j.at("covariates")) {
      const auto f = field_from_name(name.get<std::string>());
      if (!f) throw ValidationError("unknown covariate in model: " + name.get<std::string>());
      model.covariates.push_back(*f);
    }
    for (const auto& t : j.at("trees")) model.trees.push_back(tree_from_json(t));
    const auto& tr = j.at("training");
    model.training_ids = tr.at("ids").get<std::vector<std::string>>();
    model.outcome = tr.at("outcome").get<std::vector<double>>();
    model.treatment = tr.at("treatment").get<std::vector<double>>();
    model.outcome_hat = tr.at("outcome_hat").get<std::vector<double>>();
    model.propensity_hat = tr.at("propensity_hat").get<std::vector<double>>();
    model.tau_oob = tr.at("tau_oob").get<std::vector<double>>();
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const CausalForestModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save_model(model, out);
}

CausalForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace modeshift
