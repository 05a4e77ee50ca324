#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modeshift/effect.hpp"
#include "modeshift/survey_data.hpp"
#include "modeshift/tree.hpp"

namespace modeshift {

struct ForestConfig {
  int num_trees = 2000;
  double subsample_fraction = 0.5;
  double honesty_fraction = 0.5;
  int min_leaf_size = 5;
  int mtry = 0;  // 0 selects min(ceil(sqrt(p) + 20), p)
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0 = all hardware threads; never changes results
};

void validate(const ForestConfig& config);
int effective_mtry(const ForestConfig& config, std::size_t num_covariates);

// Nuisance forests use a quarter of the trees, at least 50.
int nuisance_tree_count(const ForestConfig& config);

// Propensity scores inside the doubly robust scores are clamped to this band.
inline constexpr double kPropensityFloor = 0.01;
inline constexpr double kPropensityCeiling = 0.99;

struct CausalFitOptions {
  std::vector<Field> covariates = default_covariates();
  // Known treatment probabilities (one per record, in dataset order), e.g.
  // from a randomized design. Replaces the treatment nuisance forest.
  std::optional<std::vector<double>> known_propensity;
};

// Honest causal forest plus the out-of-bag quantities of its training
// sample, stored in id order.
struct CausalForestModel {
  ForestConfig config;
  std::vector<Field> covariates;
  std::vector<forest::Tree> trees;

  std::vector<std::string> training_ids;
  std::vector<double> outcome;          // Y
  std::vector<double> treatment;        // W
  std::vector<double> outcome_hat;      // out-of-bag E[Y | x]
  std::vector<double> propensity_hat;   // out-of-bag E[W | x], unclamped
  std::vector<double> tau_oob;          // out-of-bag CATE

  std::size_t propensity_clamp_count() const;
  std::optional<std::size_t> training_index(const std::string& id) const;
};

// Fits outcome and treatment nuisance forests, centers Y and W on their
// out-of-bag predictions, and grows honest causal trees on the residuals.
CausalForestModel fit_causal_forest(const Dataset& data, const ForestConfig& config,
                                    const CausalFitOptions& options = {});

// CATE at a covariate row (column order = model.covariates), using all trees.
double predict_cate(const CausalForestModel& model, std::span<const double> row);

// CATE per record; training records get their out-of-bag prediction.
std::vector<double> predict_cate(const CausalForestModel& model, const Dataset& data);

enum class TargetSample { kAll, kOverlap };

// Doubly robust average of out-of-bag scores. kAll gives the ATE; kOverlap
// weights units by e(x)(1 - e(x)) and gives the ATO. `data` must be the
// training sample.
EffectEstimate estimate_ate_forest(const CausalForestModel& model, const Dataset& data,
                                   TargetSample target);

// Per-unit doubly robust scores in id order, with e(x) clamped.
std::vector<double> doubly_robust_scores(const CausalForestModel& model);

// Versioned binary (CBOR) model file.
void save_model(const CausalForestModel& model, std::ostream& out);
CausalForestModel load_model(std::istream& in);
void save_model(const CausalForestModel& model, const std::filesystem::path& path);
CausalForestModel load_model(const std::filesystem::path& path);

inline constexpr int kModelFormatVersion = 1;

}  // namespace modeshift
