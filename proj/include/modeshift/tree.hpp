#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "modeshift/rng.hpp"

namespace modeshift::forest {

// Sufficient statistics of the honest units in a leaf. Regression trees use
// count and sum_y only.
struct LeafStats {
  double count = 0.0;
  double n_treated = 0.0;
  double sum_w = 0.0;
  double sum_y = 0.0;
  double sum_wy = 0.0;
  double sum_ww = 0.0;

  bool operator==(const LeafStats&) const = default;
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // left child takes x <= threshold
  int left = -1;
  int right = -1;
  LeafStats stats;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root
  bool usable = true;       // false when the honest half could not populate the root

  template <typename RowAccess>
  const Node& leaf_for(RowAccess&& value) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const Node& n = nodes[static_cast<std::size_t>(i)];
      i = value(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)];
  }

  std::size_t leaf_count() const;
  bool operator==(const Tree&) const = default;
};

enum class SplitRule {
  kRegression,  // CART variance reduction on the response
  kCausal,      // gradient pseudo-outcomes of the local treatment effect
};

struct TreeParams {
  int min_leaf_size = 5;
  int mtry = 1;
  SplitRule rule = SplitRule::kRegression;
  // Each child of a split keeps at least this fraction of the parent.
  double alpha = 0.05;
};

// Training columns shared by every tree. For kRegression only `response`
// is read; kCausal reads the centered outcome (`response`), the centered
// treatment and the raw 0/1 treatment.
struct TrainingView {
  const Eigen::MatrixXd* x = nullptr;
  std::span<const double> response;
  std::span<const double> centered_treatment;
  std::span<const double> treatment;
};

// Grows the split structure on `structure`, then repopulates leaves with the
// `honest` units. Splits whose children cannot hold a valid honest leaf are
// collapsed: regression leaves need one unit, causal leaves need
// min_leaf_size units with both treatment values.
Tree grow_honest_tree(const TrainingView& data, std::span<const std::size_t> structure,
                      std::span<const std::size_t> honest, const TreeParams& params,
                      Rng& rng);

struct ForestParams {
  int num_trees = 500;
  double subsample_fraction = 0.5;
  double honesty_fraction = 0.5;
  TreeParams tree;
};

// Subsample of one tree: structure half and honest half, both ascending.
struct Subsample {
  std::vector<std::size_t> structure;
  std::vector<std::size_t> honest;
};

Subsample draw_subsample(std::size_t n, double subsample_fraction, double honesty_fraction,
                         Rng& rng);

struct GrownForest {
  std::vector<Tree> trees;
  std::vector<std::vector<std::uint8_t>> in_bag;  // per tree, per training unit
};

// Grows every tree on its own stream (seed, tag, tree index).
GrownForest grow_forest(const TrainingView& data, const ForestParams& params,
                        std::uint64_t seed, Stream tag, unsigned workers);

// Out-of-bag predictions of an honest regression forest: for each unit, the
// mean over trees not trained on it of the leaf mean.
std::vector<double> regression_oob(const TrainingView& data, const ForestParams& params,
                                   std::uint64_t seed, Stream tag, unsigned workers);

// Accumulates forest weights; each tree gives its leaf units weight 1/count.
struct EffectAccumulator {
  double trees = 0.0;
  double w = 0.0;
  double y = 0.0;
  double wy = 0.0;
  double ww = 0.0;

  void add(const LeafStats& s);
  // Weighted local slope of the centered outcome on the centered treatment.
  // NaN when no tree contributed or the treatment has no spread.
  double effect() const;
};

}  // namespace modeshift::forest
