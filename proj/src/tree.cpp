#include "modeshift/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modeshift/error.hpp"
#include "modeshift/parallel.hpp"

namespace modeshift::forest {

namespace {

struct Item {
  double x;
  double label;
  double treated;
  std::size_t order;  // position before sorting; breaks ties like a stable sort
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& data, const TreeParams& params, Rng& rng)
      : data_(data), params_(params), rng_(rng) {
    features_.resize(static_cast<std::size_t>(data.x->cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::span<const std::size_t> structure, std::span<const std::size_t> honest) {
    std::vector<std::size_t> samples(structure.begin(), structure.end());
    grow(samples);
    std::vector<std::size_t> h(honest.begin(), honest.end());
    if (!valid_honest(h)) {
      tree_.usable = false;
      tree_.nodes.resize(1);
      tree_.nodes[0] = Node{};
      tree_.nodes[0].stats = stats_of(h);
      return std::move(tree_);
    }
    populate(0, h);
    compact();
    return std::move(tree_);
  }

 private:
  bool causal() const { return params_.rule == SplitRule::kCausal; }
  double x(std::size_t i, int f) const {
    return (*data_.x)(static_cast<Eigen::Index>(i), f);
  }

  // Labels for the split search; false when the node cannot be split.
  bool relabel(const std::vector<std::size_t>& samples) {
    labels_.resize(samples.size());
    if (!causal()) {
      for (std::size_t k = 0; k < samples.size(); ++k) labels_[k] = data_.response[samples[k]];
      return true;
    }
    const double n = static_cast<double>(samples.size());
    double treated = 0.0, w_bar = 0.0, y_bar = 0.0;
    for (std::size_t i : samples) {
      treated += data_.treatment[i];
      w_bar += data_.centered_treatment[i];
      y_bar += data_.response[i];
    }
    if (treated == 0.0 || treated == n) return false;
    w_bar /= n;
    y_bar /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i : samples) {
      const double dw = data_.centered_treatment[i] - w_bar;
      sxx += dw * dw;
      sxy += dw * (data_.response[i] - y_bar);
    }
    if (!(sxx > 1e-12)) return false;
    const double tau = sxy / sxx;
    const double scale = sxx / n;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const std::size_t i = samples[k];
      const double dw = data_.centered_treatment[i] - w_bar;
      labels_[k] = dw * ((data_.response[i] - y_bar) - dw * tau) / scale;
    }
    return true;
  }

  int grow(std::vector<std::size_t>& samples) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf_size);
    if (samples.size() < 2 * min_leaf || !relabel(samples)) return id;

    // Candidate features, then ascending so ties favour the lowest index.
    const std::size_t p = features_.size();
    const std::size_t mtry = std::min<std::size_t>(static_cast<std::size_t>(params_.mtry), p);
    for (std::size_t k = 0; k < mtry; ++k) {
      std::swap(features_[k], features_[k + uniform_index(rng_, p - k)]);
    }
    std::vector<int> candidates(features_.begin(), features_.begin() + static_cast<long>(mtry));
    std::sort(candidates.begin(), candidates.end());

    const std::size_t n = samples.size();
    double total = 0.0, total_sq = 0.0, total_treated = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      total += labels_[k];
      total_sq += labels_[k] * labels_[k];
      if (causal()) total_treated += data_.treatment[samples[k]];
    }
    const double parent = total * total / static_cast<double>(n);
    double best_gain = parent + 1e-10 * total_sq;
    int best_feature = -1;
    double best_threshold = 0.0;

    const std::size_t min_child = std::max(
        min_leaf, static_cast<std::size_t>(std::ceil(params_.alpha * static_cast<double>(n))));
    items_.resize(n);
    for (int f : candidates) {
      bool binary = true;
      std::size_t zeros = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = samples[k];
        const double v = x(i, f);
        items_[k] = {v, labels_[k], causal() ? data_.treatment[i] : 0.0, k};
        binary = binary && (v == 0.0 || v == 1.0);
        zeros += v == 0.0 ? 1 : 0;
      }
      if (binary) {
        // Counting sort; same order as a stable sort.
        scratch_.resize(n);
        std::size_t lo = 0, hi = zeros;
        for (const Item& it : items_) scratch_[it.x == 0.0 ? lo++ : hi++] = it;
        items_.swap(scratch_);
      } else {
        std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) {
          return a.x < b.x || (a.x == b.x && a.order < b.order);
        });
      }
      double left_sum = 0.0, left_treated = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += items_[k].label;
        left_treated += items_[k].treated;
        if (items_[k].x == items_[k + 1].x) continue;
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < min_child) continue;
        if (nr < min_child) break;
        if (causal()) {
          const double right_treated = total_treated - left_treated;
          if (left_treated == 0.0 || left_treated == static_cast<double>(nl) ||
              right_treated == 0.0 || right_treated == static_cast<double>(nr)) {
            continue;
          }
        }
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          double mid = 0.5 * (items_[k].x + items_[k + 1].x);
          if (!(mid < items_[k + 1].x)) mid = items_[k].x;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : samples) {
      (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(left);
    const int r = grow(right);
    Node& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  bool valid_honest(const std::vector<std::size_t>& units) const {
    if (!causal()) return !units.empty();
    if (units.size() < static_cast<std::size_t>(params_.min_leaf_size)) return false;
    double treated = 0.0;
    for (std::size_t i : units) treated += data_.treatment[i];
    return treated > 0.0 && treated < static_cast<double>(units.size());
  }

  LeafStats stats_of(const std::vector<std::size_t>& units) const {
    LeafStats s;
    s.count = static_cast<double>(units.size());
    for (std::size_t i : units) {
      const double y = data_.response[i];
      s.sum_y += y;
      if (causal()) {
        const double w = data_.centered_treatment[i];
        s.n_treated += data_.treatment[i];
        s.sum_w += w;
        s.sum_wy += w * y;
        s.sum_ww += w * w;
      }
    }
    return s;
  }

  void populate(int id, std::vector<std::size_t>& units) {
    Node& node = tree_.nodes[static_cast<std::size_t>(id)];
    if (!node.is_leaf()) {
      std::vector<std::size_t> left, right;
      for (std::size_t i : units) {
        (x(i, node.feature) <= node.threshold ? left : right).push_back(i);
      }
      if (valid_honest(left) && valid_honest(right)) {
        const int l = node.left, r = node.right;
        populate(l, left);
        populate(r, right);
        return;
      }
      node.feature = -1;
      node.left = node.right = -1;
    }
    node.stats = stats_of(units);
  }

  // Drops nodes orphaned by collapsed splits, keeping preorder.
  void compact() {
    std::vector<Node> kept;
    kept.reserve(tree_.nodes.size());
    auto copy = [&](auto&& self, int id) -> int {
      const int new_id = static_cast<int>(kept.size());
      kept.push_back(tree_.nodes[static_cast<std::size_t>(id)]);
      if (!kept.back().is_leaf()) {
        const int l = self(self, kept[static_cast<std::size_t>(new_id)].left);
        const int r = self(self, kept[static_cast<std::size_t>(new_id)].right);
        kept[static_cast<std::size_t>(new_id)].left = l;
        kept[static_cast<std::size_t>(new_id)].right = r;
      }
      return new_id;
    };
    copy(copy, 0);
    tree_.nodes = std::move(kept);
  }

  const TrainingView& data_;
  const TreeParams& params_;
  Rng& rng_;
  Tree tree_;
  std::vector<int> features_;
  std::vector<double> labels_;
  std::vector<Item> items_;
  std::vector<Item> scratch_;
};

}  // namespace

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

Tree grow_honest_tree(const TrainingView& data, std::span<const std::size_t> structure,
                      std::span<const std::size_t> honest, const TreeParams& params,
                      Rng& rng) {
  if (params.min_leaf_size < 1) throw ValidationError("min_leaf_size must be at least 1");
  if (params.mtry < 1) throw ValidationError("mtry must be at least 1");
  if (!(params.alpha >= 0.0 && params.alpha < 0.5)) {
    throw ValidationError("alpha must lie in [0, 0.5)");
  }
  TreeBuilder builder(data, params, rng);
  return builder.build(structure, honest);
}

Subsample draw_subsample(std::size_t n, double subsample_fraction, double honesty_fraction,
                         Rng& rng) {
  const auto size = static_cast<std::size_t>(std::floor(static_cast<double>(n) * subsample_fraction));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = 0; k < size; ++k) {
    std::swap(perm[k], perm[k + uniform_index(rng, n - k)]);
  }
  auto structure_size =
      static_cast<std::size_t>(std::floor(static_cast<double>(size) * honesty_fraction));
  structure_size = std::clamp<std::size_t>(structure_size, 1, size > 1 ? size - 1 : 1);
  Subsample s;
  s.structure.assign(perm.begin(), perm.begin() + static_cast<long>(structure_size));
  s.honest.assign(perm.begin() + static_cast<long>(structure_size),
                  perm.begin() + static_cast<long>(size));
  std::sort(s.structure.begin(), s.structure.end());
  std::sort(s.honest.begin(), s.honest.end());
  return s;
}

GrownForest grow_forest(const TrainingView& data, const ForestParams& params,
                        std::uint64_t seed, Stream tag, unsigned workers) {
  const auto n = static_cast<std::size_t>(data.x->rows());
  const auto trees = static_cast<std::size_t>(params.num_trees);
  GrownForest forest;
  forest.trees.resize(trees);
  forest.in_bag.resize(trees);
  parallel_for(trees, workers, [&](std::size_t b) {
    Rng rng = make_rng(seed, tag, b);
    const Subsample sub =
        draw_subsample(n, params.subsample_fraction, params.honesty_fraction, rng);
    forest.trees[b] = grow_honest_tree(data, sub.structure, sub.honest, params.tree, rng);
    auto& bag = forest.in_bag[b];
    bag.assign(n, 0);
    for (std::size_t i : sub.structure) bag[i] = 1;
    for (std::size_t i : sub.honest) bag[i] = 1;
  });
  return forest;
}

std::vector<double> regression_oob(const TrainingView& data, const ForestParams& params,
                                   std::uint64_t seed, Stream tag, unsigned workers) {
  const GrownForest forest = grow_forest(data, params, seed, tag, workers);
  const auto n = static_cast<std::size_t>(data.x->rows());
  std::vector<double> oob(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto row = [&](int f) { return (*data.x)(static_cast<Eigen::Index>(i), f); };
    double sum = 0.0, count = 0.0, all_sum = 0.0, all_count = 0.0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
      const Tree& tree = forest.trees[b];
      if (!tree.usable) continue;
      const LeafStats& s = tree.leaf_for(row).stats;
      const double leaf_mean = s.sum_y / s.count;
      all_sum += leaf_mean;
      all_count += 1.0;
      if (!forest.in_bag[b][i]) {
        sum += leaf_mean;
        count += 1.0;
      }
    }
    if (count > 0.0) {
      oob[i] = sum / count;
    } else if (all_count > 0.0) {
      oob[i] = all_sum / all_count;
    } else {
      oob[i] = data.response[i];
    }
  });
  return oob;
}

void EffectAccumulator::add(const LeafStats& s) {
  trees += 1.0;
  w += s.sum_w / s.count;
  y += s.sum_y / s.count;
  wy += s.sum_wy / s.count;
  ww += s.sum_ww / s.count;
}

double EffectAccumulator::effect() const {
  if (trees == 0.0) return NAN;
  const double w_bar = w / trees;
  const double y_bar = y / trees;
  const double cov = wy / trees - w_bar * y_bar;
  const double var = ww / trees - w_bar * w_bar;
  if (!(var > 1e-14)) return NAN;
  return cov / var;
}

}  // namespace modeshift::forest
