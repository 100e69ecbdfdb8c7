#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "verdict/error.hpp"
#include "verdict/parallel.hpp"
#include "verdict/rng.hpp"

namespace verdict {

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), data(r * c, 0.0) {}

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

struct ForestHyperParams {
  int max_depth = 8;
  double ccp_alpha = 0.0;
  int n_trees = 100;
  bool bootstrap = true;
  // Per-node feature subset of ceil(sqrt(m)); disabled for plain CART.
  bool sqrt_features = true;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::int64_t n_neg = 0;  // weighted class counts reaching this node
  std::int64_t n_pos = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; BFS order

  int max_depth() const {
    if (nodes.empty()) return 0;
    int deepest = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [id, d] = stack.back();
      stack.pop_back();
      deepest = std::max(deepest, d);
      const TreeNode& n = nodes[id];
      if (n.feature >= 0) {
        stack.push_back({n.left, d + 1});
        stack.push_back({n.right, d + 1});
      }
    }
    return deepest;
  }

  int leaf_count() const {
    int leaves = 0;
    for (const auto& n : nodes) leaves += n.feature < 0 ? 1 : 0;
    return leaves;
  }

  double predict(const double* row) const {
    int id = 0;
    while (nodes[id].feature >= 0)
      id = row[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left
                                                         : nodes[id].right;
    const TreeNode& leaf = nodes[id];
    return static_cast<double>(leaf.n_pos) /
           static_cast<double>(leaf.n_pos + leaf.n_neg);
  }
};

class ForestModel {
 public:
  ForestModel() = default;
  explicit ForestModel(std::vector<Tree> trees) : trees_(std::move(trees)) {}

  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }

 private:
  std::vector<Tree> trees_;
};

namespace detail {

inline double gini(std::int64_t neg, std::int64_t pos) {
  const double total = static_cast<double>(neg + pos);
  if (total <= 0.0) return 0.0;
  const double pn = neg / total;
  const double pp = pos / total;
  return 1.0 - pn * pn - pp * pp;
}

// Minimal cost-complexity pruning: repeatedly collapse the weakest link
// while its effective alpha stays below ccp_alpha. R(t) uses the Gini
// impurity weighted by the fraction of samples reaching t.
inline void prune_ccp(Tree& tree, double ccp_alpha) {
  if (ccp_alpha <= 0.0 || tree.nodes.size() <= 1) return;
  const double root_weight =
      static_cast<double>(tree.nodes[0].n_neg + tree.nodes[0].n_pos);
  auto node_r = [&](int id) {
    const TreeNode& n = tree.nodes[id];
    return (n.n_neg + n.n_pos) / root_weight * gini(n.n_neg, n.n_pos);
  };
  while (true) {
    // Post-order accumulation of subtree impurity and leaf counts.
    const int count = static_cast<int>(tree.nodes.size());
    std::vector<double> subtree_r(count, 0.0);
    std::vector<int> subtree_leaves(count, 0);
    std::vector<int> order;
    order.reserve(count);
    std::vector<int> stack{0};
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      order.push_back(id);
      if (tree.nodes[id].feature >= 0) {
        stack.push_back(tree.nodes[id].left);
        stack.push_back(tree.nodes[id].right);
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int id = *it;
      if (tree.nodes[id].feature < 0) {
        subtree_r[id] = node_r(id);
        subtree_leaves[id] = 1;
      } else {
        subtree_r[id] =
            subtree_r[tree.nodes[id].left] + subtree_r[tree.nodes[id].right];
        subtree_leaves[id] = subtree_leaves[tree.nodes[id].left] +
                             subtree_leaves[tree.nodes[id].right];
      }
    }
    int weakest = -1;
    double weakest_alpha = std::numeric_limits<double>::infinity();
    for (int id : order) {
      if (tree.nodes[id].feature < 0) continue;
      const double alpha_eff =
          (node_r(id) - subtree_r[id]) / (subtree_leaves[id] - 1);
      if (alpha_eff < weakest_alpha) {
        weakest_alpha = alpha_eff;
        weakest = id;
      }
    }
    if (weakest < 0 || !(weakest_alpha < ccp_alpha)) break;
    tree.nodes[weakest].feature = -1;
    tree.nodes[weakest].left = tree.nodes[weakest].right = -1;
  }
  // Drop unreachable nodes and renumber in BFS order.
  std::vector<int> remap(tree.nodes.size(), -1);
  std::vector<TreeNode> compact;
  std::vector<int> queue{0};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    int id = queue[q];
    remap[id] = static_cast<int>(compact.size());
    compact.push_back(tree.nodes[id]);
    if (tree.nodes[id].feature >= 0) {
      queue.push_back(tree.nodes[id].left);
      queue.push_back(tree.nodes[id].right);
    }
  }
  for (std::size_t q = 0; q < queue.size(); ++q) {
    TreeNode& n = compact[remap[queue[q]]];
    if (n.feature >= 0) {
      n.left = remap[n.left];
      n.right = remap[n.right];
    }
  }
  tree.nodes = std::move(compact);
}

}  // namespace detail

// Grows one CART tree with greedy Gini splits ("value <= threshold goes
// left"), optionally on a bootstrap sample with per-node feature subsets,
// then applies minimal cost-complexity pruning. Splits with zero impurity
// decrease are taken while the node is impure, so structured parity-style
// data is still separable within the depth budget.
inline Tree fit_tree(const FeatureMatrix& features,
                     const std::vector<int>& labels,
                     const ForestHyperParams& params, Rng& rng) {
  const std::size_t n = features.rows;
  const std::size_t m = features.cols;
  if (n == 0 || labels.size() != n)
    throw Error(ErrorKind::kDomain, "bad training data shape");

  std::vector<std::int64_t> weight(n, 1);
  if (params.bootstrap) {
    std::fill(weight.begin(), weight.end(), 0);
    for (std::size_t d = 0; d < n; ++d) ++weight[rng.uniform_index(n)];
  }

  // Global presort per feature, shared by every level of the scan.
  std::vector<std::vector<std::uint32_t>> order(m);
  for (std::size_t f = 0; f < m; ++f) {
    auto& ord = order[f];
    ord.resize(n);
    std::iota(ord.begin(), ord.end(), 0u);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return features.at(a, f) < features.at(b, f);
                     });
  }

  const int subset_size =
      params.sqrt_features
          ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))))
          : static_cast<int>(m);

  Tree tree;
  tree.nodes.emplace_back();
  {
    std::int64_t neg = 0, pos = 0;
    for (std::size_t i = 0; i < n; ++i)
      (labels[i] > 0 ? pos : neg) += weight[i];
    tree.nodes[0].n_neg = neg;
    tree.nodes[0].n_pos = pos;
  }

  std::vector<int> leaf_of(n, 0);
  std::vector<int> active{0};
  struct SlotState {
    std::vector<int> mask;  // sorted candidate features
    std::int64_t tot_neg = 0, tot_pos = 0;
    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
  };

  for (int depth = 0; depth < params.max_depth && !active.empty(); ++depth) {
    std::vector<int> splittable;
    std::vector<SlotState> slots;
    std::vector<int> slot_of_node(tree.nodes.size(), -1);
    for (int id : active) {
      const TreeNode& node = tree.nodes[id];
      if (node.n_neg == 0 || node.n_pos == 0) continue;  // pure
      SlotState s;
      s.tot_neg = node.n_neg;
      s.tot_pos = node.n_pos;
      auto picks = rng.sample_without_replacement(m, subset_size);
      s.mask.assign(picks.begin(), picks.end());
      std::sort(s.mask.begin(), s.mask.end());
      slot_of_node[id] = static_cast<int>(slots.size());
      slots.push_back(std::move(s));
      splittable.push_back(id);
    }
    if (splittable.empty()) break;

    std::vector<std::int64_t> cum_neg(slots.size()), cum_pos(slots.size());
    std::vector<double> prev_val(slots.size());
    std::vector<char> has_prev(slots.size());
    for (std::size_t f = 0; f < m; ++f) {
      std::fill(cum_neg.begin(), cum_neg.end(), 0);
      std::fill(cum_pos.begin(), cum_pos.end(), 0);
      std::fill(has_prev.begin(), has_prev.end(), 0);
      for (std::uint32_t i : order[f]) {
        if (weight[i] == 0) continue;
        const int node_id = leaf_of[i];
        if (node_id >= static_cast<int>(slot_of_node.size())) continue;
        const int k = slot_of_node[node_id];
        if (k < 0) continue;
        SlotState& s = slots[k];
        if (!std::binary_search(s.mask.begin(), s.mask.end(),
                                static_cast<int>(f)))
          continue;
        const double v = features.at(i, f);
        if (has_prev[k] && v > prev_val[k]) {
          const std::int64_t ln = cum_neg[k], lp = cum_pos[k];
          const std::int64_t rn = s.tot_neg - ln, rp = s.tot_pos - lp;
          const double total = static_cast<double>(s.tot_neg + s.tot_pos);
          const double gain =
              detail::gini(s.tot_neg, s.tot_pos) -
              (ln + lp) / total * detail::gini(ln, lp) -
              (rn + rp) / total * detail::gini(rn, rp);
          if (gain > s.best_gain) {
            s.best_gain = gain;
            s.best_feature = static_cast<int>(f);
            s.best_threshold = 0.5 * (prev_val[k] + v);
          }
        }
        (labels[i] > 0 ? cum_pos[k] : cum_neg[k]) += weight[i];
        prev_val[k] = v;
        has_prev[k] = 1;
      }
    }

    std::vector<int> next_active;
    for (std::size_t si = 0; si < splittable.size(); ++si) {
      const int id = splittable[si];
      const SlotState& s = slots[si];
      if (s.best_feature < 0) continue;  // all candidate features constant
      TreeNode& node = tree.nodes[id];
      node.feature = s.best_feature;
      node.threshold = s.best_threshold;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      next_active.push_back(node.left);
      next_active.push_back(node.right);
    }
    if (next_active.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight[i] == 0) continue;
      const TreeNode& node = tree.nodes[leaf_of[i]];
      if (node.feature < 0) continue;
      const int child = features.at(i, node.feature) <= node.threshold
                            ? node.left
                            : node.right;
      leaf_of[i] = child;
      (labels[i] > 0 ? tree.nodes[child].n_pos : tree.nodes[child].n_neg) +=
          weight[i];
    }
    active = std::move(next_active);
  }

  detail::prune_ccp(tree, params.ccp_alpha);
  return tree;
}

// n_trees independent trees, each on its own deterministic RNG substream so
// the model does not depend on evaluation parallelism.
inline ForestModel fit_forest(const FeatureMatrix& features,
                              const std::vector<int>& labels,
                              const ForestHyperParams& params,
                              int threads = 1) {
  std::vector<Tree> trees(params.n_trees);
  parallel_for(params.n_trees, threads, [&](std::size_t t) {
    Rng rng = Rng::substream(params.seed, /*tag=*/0x7265657au, t);
    trees[t] = fit_tree(features, labels, params, rng);
  });
  return ForestModel(std::move(trees));
}

inline std::vector<double> predict_proba(const ForestModel& model,
                                         const FeatureMatrix& features,
                                         int threads = 1) {
  if (model.size() == 0)
    throw Error(ErrorKind::kDomain, "empty forest");
  std::vector<double> out(features.rows, 0.0);
  parallel_for(features.rows, threads, [&](std::size_t r) {
    const double* row = features.data.data() + r * features.cols;
    double sum = 0.0;
    for (const Tree& t : model.trees()) sum += t.predict(row);
    out[r] = sum / static_cast<double>(model.size());
  });
  return out;
}

struct CrossValOptions {
  int folds = 5;
  int cv_trees = 25;  // forest size used for fold scoring only
  int n_trees_final = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Picks the (max_depth, ccp_alpha) grid point with the highest mean fold
// accuracy on stratified folds. Ties go to the lower-capacity point:
// smaller depth first, then larger ccp_alpha. Fold count shrinks to the
// minority-class size; if that leaves fewer than two folds the lowest
// capacity point is returned outright.
inline ForestHyperParams cross_validate(
    const FeatureMatrix& features, const std::vector<int>& labels,
    std::vector<std::pair<int, double>> grid, const CrossValOptions& opts) {
  if (grid.empty()) throw Error(ErrorKind::kDomain, "empty CV grid");
  std::sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  });
  auto make_params = [&](const std::pair<int, double>& g) {
    ForestHyperParams p;
    p.max_depth = g.first;
    p.ccp_alpha = g.second;
    p.n_trees = opts.n_trees_final;
    p.seed = opts.seed;
    return p;
  };

  std::vector<std::size_t> pos_rows, neg_rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] > 0 ? pos_rows : neg_rows).push_back(i);
  const std::size_t minority = std::min(pos_rows.size(), neg_rows.size());
  const int folds = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(opts.folds), minority));
  if (folds < 2 || grid.size() == 1) return make_params(grid.front());

  // Stratified fold assignment from a seeded shuffle within each class.
  std::vector<int> fold_of(labels.size(), 0);
  Rng fold_rng = Rng::substream(opts.seed, /*tag=*/0x63766c64u);
  fold_rng.shuffle(pos_rows);
  fold_rng.shuffle(neg_rows);
  for (std::size_t i = 0; i < pos_rows.size(); ++i)
    fold_of[pos_rows[i]] = static_cast<int>(i % folds);
  for (std::size_t i = 0; i < neg_rows.size(); ++i)
    fold_of[neg_rows[i]] = static_cast<int>(i % folds);

  const std::size_t units = grid.size() * static_cast<std::size_t>(folds);
  std::vector<double> accuracy(units, 0.0);
  parallel_for(units, opts.threads, [&](std::size_t u) {
    const std::size_t g = u / folds;
    const int fold = static_cast<int>(u % folds);
    FeatureMatrix train(0, features.cols);
    std::vector<int> train_labels;
    std::vector<std::size_t> val_rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold_of[i] == fold) {
        val_rows.push_back(i);
      } else {
        for (std::size_t c = 0; c < features.cols; ++c)
          train.data.push_back(features.at(i, c));
        ++train.rows;
        train_labels.push_back(labels[i]);
      }
    }
    ForestHyperParams p = make_params(grid[g]);
    p.n_trees = opts.cv_trees;
    p.seed = Rng::derive(opts.seed, /*tag=*/0x63767533u, u);
    ForestModel model = fit_forest(train, train_labels, p);
    std::size_t correct = 0;
    for (std::size_t i : val_rows) {
      const double* row = features.data.data() + i * features.cols;
      double proba = 0.0;
      for (const Tree& t : model.trees()) proba += t.predict(row);
      proba /= static_cast<double>(model.size());
      const int pred = proba > 0.5 ? 1 : -1;
      correct += pred == labels[i] ? 1 : 0;
    }
    accuracy[u] = val_rows.empty()
                      ? 0.0
                      : static_cast<double>(correct) / val_rows.size();
  });

  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0;
    for (int f = 0; f < folds; ++f) mean += accuracy[g * folds + f];
    mean /= folds;
    if (mean > best_mean) {
      best_mean = mean;
      best = g;
    }
  }
  return make_params(grid[best]);
}

inline std::vector<std::pair<int, double>> default_cv_grid() {
  return {{1, 0.0},    {1, 1e-4}, {1, 1e-3}, {1, 1e-2}, {2, 0.0},
          {2, 1e-4},   {2, 1e-3}, {2, 1e-2}, {3, 0.0},  {3, 1e-4},
          {3, 1e-3},   {3, 1e-2}, {5, 0.0},  {5, 1e-4}, {5, 1e-3},
          {5, 1e-2},   {8, 0.0},  {8, 1e-4}, {8, 1e-3}, {8, 1e-2}};
}

}  // namespace verdict
