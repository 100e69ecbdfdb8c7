#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "verdict/data.hpp"
#include "verdict/dupfree.hpp"
#include "verdict/error.hpp"
#include "verdict/forest.hpp"
#include "verdict/smote.hpp"
#include "verdict/transitivity_exact.hpp"
#include "verdict/transitivity_net.hpp"

namespace verdict {

enum class TransitivityMode {
  kNone,
  kExactOneSideLeft,   // left table duplicate-free
  kExactOneSideRight,  // right table duplicate-free
  kExactTwoSide,
  kLearnedSingleTable,
  kAuto,
};

struct EmConfig {
  int max_iterations = 10;
  double convergence_flip_fraction = 0.001;
  double prob_clamp_epsilon = 1e-6;
  TransitivityMode transitivity_mode = TransitivityMode::kNone;
  std::uint64_t seed = 0;
  int threads = 1;

  int smote_k_neighbors = 5;
  std::vector<std::pair<int, double>> cv_grid = default_cv_grid();
  int cv_folds = 5;
  int cv_trees = 25;
  int n_trees = 100;

  // duplicate-free detection in Auto mode
  double dupfree_c = 0.05;
  int dupfree_sim_repeats = 1000;
  long n_left_tuples = 0;   // 0: derive from the candidate set
  long n_right_tuples = 0;
};

struct IterationStat {
  int iteration = 0;
  double flip_fraction = 0.0;
  int chosen_depth = 0;
  double chosen_ccp_alpha = 0.0;
};

struct EmResult {
  ProbAssignment probs;
  std::vector<IterationStat> iterations;
  bool converged = false;
  TransitivityMode resolved_mode = TransitivityMode::kNone;
  std::optional<DupFreeReport> dupfree_left;
  std::optional<DupFreeReport> dupfree_right;
};

namespace detail {

inline FeatureMatrix vote_features(const LabelingMatrix& x) {
  FeatureMatrix f(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      f.at(i, j) = static_cast<double>(x.vote(i, j));
  return f;
}

// The EM loop of the forest labeling model. Each iteration binarizes the
// current soft labels, rebalances with SMOTE, picks capacity by cross
// validation, fits the forest on the augmented data and predicts on the
// original matrix; the chosen enforcement then projects the E-step result.
inline EmResult run_em(const LabelingMatrix& x, const EmConfig& cfg,
                       TransitivityMode mode, const TransitivityNet* net) {
  if (mode == TransitivityMode::kLearnedSingleTable) {
    if (x.task() != TaskKind::kSingleTable)
      throw Error(ErrorKind::kModeMismatch,
                  "learned transitivity needs a single-table task");
    if (net == nullptr)
      throw Error(ErrorKind::kModeMismatch,
                  "learned transitivity needs a trained model");
  }
  if ((mode == TransitivityMode::kExactOneSideLeft ||
       mode == TransitivityMode::kExactOneSideRight ||
       mode == TransitivityMode::kExactTwoSide) &&
      x.task() != TaskKind::kTwoTable)
    throw Error(ErrorKind::kModeMismatch,
                "exact transitivity needs a two-table task");

  const FeatureMatrix features = vote_features(x);
  ProbAssignment mv = majority_vote(x);
  std::vector<double> gamma(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) gamma[i] = mv.value_at(i);

  EmResult result;
  result.resolved_mode = mode;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    std::vector<int> hard(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) hard[i] = hard_label(gamma[i]);

    // M-step
    SmoteConfig smote_cfg;
    smote_cfg.k_neighbors = cfg.smote_k_neighbors;
    smote_cfg.seed = Rng::derive(cfg.seed, /*tag=*/0x736d6f31u, iter);
    SmoteResult balanced = smote(features, hard, smote_cfg);

    CrossValOptions cv_opts;
    cv_opts.folds = cfg.cv_folds;
    cv_opts.cv_trees = cfg.cv_trees;
    cv_opts.n_trees_final = cfg.n_trees;
    cv_opts.seed = Rng::derive(cfg.seed, /*tag=*/0x63766974u, iter);
    cv_opts.threads = cfg.threads;
    ForestHyperParams params =
        cross_validate(balanced.features, balanced.labels, cfg.cv_grid,
                       cv_opts);
    params.seed = Rng::derive(cfg.seed, /*tag=*/0x666f7231u, iter);
    ForestModel forest =
        fit_forest(balanced.features, balanced.labels, params, cfg.threads);

    // E-step on the original matrix
    gamma = predict_proba(forest, features, cfg.threads);
    if (mode != TransitivityMode::kNone) {
      ProbAssignment assignment(x.pairs(), gamma);
      ProbAssignment constrained;
      switch (mode) {
        case TransitivityMode::kExactOneSideLeft:
          constrained =
              enforce_one_side_dupfree(assignment, TableSide::kLeft);
          break;
        case TransitivityMode::kExactOneSideRight:
          constrained =
              enforce_one_side_dupfree(assignment, TableSide::kRight);
          break;
        case TransitivityMode::kExactTwoSide:
          constrained =
              enforce_two_side_dupfree(assignment, cfg.prob_clamp_epsilon);
          break;
        case TransitivityMode::kLearnedSingleTable:
          constrained = apply_transitivity_ml(
              assignment, *net, Rng::derive(cfg.seed, 0x6d6c6974u, iter),
              cfg.threads);
          break;
        default:
          constrained = assignment;
      }
      for (std::size_t i = 0; i < x.rows(); ++i)
        gamma[i] = constrained.value_at(i);
    }

    std::size_t flips = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
      flips += hard_label(gamma[i]) != hard[i] ? 1 : 0;
    const double flip_fraction =
        static_cast<double>(flips) / static_cast<double>(x.rows());
    result.iterations.push_back(
        {iter, flip_fraction, params.max_depth, params.ccp_alpha});
    if (flip_fraction < cfg.convergence_flip_fraction) {
      result.converged = true;
      break;
    }
  }

  const double eps = cfg.prob_clamp_epsilon;
  for (auto& g : gamma) {
    if (!std::isfinite(g))
      throw Error(ErrorKind::kNumeric, "non-finite probability");
    g = std::min(std::max(g, eps), 1.0 - eps);
  }
  result.probs = ProbAssignment(x.pairs(), gamma);
  return result;
}

inline long distinct_side_count(const LabelingMatrix& x, bool left) {
  std::vector<std::string> ids;
  for (const PairId& p : x.pairs()) ids.push_back(left ? p.a.id : p.b.id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return static_cast<long>(ids.size());
}

}  // namespace detail

// Plain forest EM, no transitivity.
inline EmResult simple_infer(const LabelingMatrix& x, const EmConfig& cfg) {
  return detail::run_em(x, cfg, TransitivityMode::kNone, nullptr);
}

// EM with a transitivity-constrained E-step. Auto mode runs an
// unconstrained pass first, tests both tables for duplicates on its
// predicted matches, and reruns with the implied exact mode; detection is
// skipped when the caller supplies duplicate-free hints.
inline EmResult simple_em_infer(
    const LabelingMatrix& x, const EmConfig& cfg,
    std::optional<std::pair<bool, bool>> dupfree_hints = std::nullopt,
    const TransitivityNet* net = nullptr) {
  TransitivityMode mode = cfg.transitivity_mode;
  if (mode != TransitivityMode::kAuto)
    return detail::run_em(x, cfg, mode, net);

  if (x.task() == TaskKind::kSingleTable)
    return detail::run_em(x, cfg, TransitivityMode::kLearnedSingleTable, net);

  bool left_dupfree = false, right_dupfree = false;
  std::optional<DupFreeReport> left_report, right_report;
  if (dupfree_hints) {
    left_dupfree = dupfree_hints->first;
    right_dupfree = dupfree_hints->second;
  } else {
    EmResult unconstrained =
        detail::run_em(x, cfg, TransitivityMode::kNone, nullptr);
    std::vector<std::pair<std::string, std::string>> matches;
    for (std::size_t i = 0; i < unconstrained.probs.size(); ++i)
      if (unconstrained.probs.value_at(i) > 0.5)
        matches.push_back({unconstrained.probs.pairs()[i].a.id,
                           unconstrained.probs.pairs()[i].b.id});
    if (matches.empty()) {
      // Nothing predicted as a match: transitivity has nothing to bind, so
      // finish with the unconstrained result.
      unconstrained.resolved_mode = TransitivityMode::kNone;
      return unconstrained;
    }
    DupFreeInput base;
    base.matches = matches;
    base.c = cfg.dupfree_c;
    base.sim_repeats = cfg.dupfree_sim_repeats;
    base.threads = cfg.threads;
    DupFreeInput test_left = base;
    test_left.direction = DupFreeDirection::kTestLeft;
    test_left.n_opposite = cfg.n_right_tuples > 0
                               ? cfg.n_right_tuples
                               : detail::distinct_side_count(x, false);
    test_left.seed = Rng::derive(cfg.seed, /*tag=*/0x6466746cu);
    DupFreeInput test_right = base;
    test_right.direction = DupFreeDirection::kTestRight;
    test_right.n_opposite = cfg.n_left_tuples > 0
                                ? cfg.n_left_tuples
                                : detail::distinct_side_count(x, true);
    test_right.seed = Rng::derive(cfg.seed, /*tag=*/0x64667472u);
    left_report = dupfree_test(test_left);
    right_report = dupfree_test(test_right);
    left_dupfree = !left_report->reject;
    right_dupfree = !right_report->reject;
  }

  TransitivityMode resolved = TransitivityMode::kNone;
  if (left_dupfree && right_dupfree)
    resolved = TransitivityMode::kExactTwoSide;
  else if (left_dupfree)
    resolved = TransitivityMode::kExactOneSideLeft;
  else if (right_dupfree)
    resolved = TransitivityMode::kExactOneSideRight;
  EmResult result = detail::run_em(x, cfg, resolved, net);
  result.dupfree_left = left_report;
  result.dupfree_right = right_report;
  return result;
}

// Per-LF 3x2 conditional vote tables with a shared class prior.
struct ConfusionModel {
  // table[lf][vote][cls]: vote index 0:-1, 1:0, 2:+1; cls 0:-1, 1:+1
  std::vector<std::array<std::array<double, 2>, 3>> table;
  double prior = 0.5;
};

struct DawidSkeneResult {
  ProbAssignment probs;
  ConfusionModel model;
  int iterations = 0;
};

// Classic confusion-matrix EM with abstain kept as a third emitted symbol.
// Rows where every LF abstains carry no evidence and sit at the class
// prior.
inline DawidSkeneResult dawid_skene(const LabelingMatrix& x,
                                    int max_iterations = 100,
                                    double tol = 1e-6) {
  const std::size_t n = x.rows(), m = x.cols();
  ProbAssignment mv = majority_vote(x);
  std::vector<double> gamma(n);
  for (std::size_t i = 0; i < n; ++i) gamma[i] = mv.value_at(i);

  const double smoothing = 0.01;
  ConfusionModel model;
  model.table.resize(m);
  std::vector<char> all_abstain(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m && all_abstain[i]; ++j)
      if (x.vote(i, j) != 0) all_abstain[i] = 0;

  int iterations = 0;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    iterations = iter;
    // M-step: class prior and per-LF vote tables from soft counts.
    double prior = 0.0;
    for (double g : gamma) prior += g;
    prior = std::min(std::max(prior / n, 1e-6), 1.0 - 1e-6);
    for (std::size_t j = 0; j < m; ++j) {
      double acc[3][2];
      for (int v = 0; v < 3; ++v)
        for (int c = 0; c < 2; ++c) acc[v][c] = smoothing;
      for (std::size_t i = 0; i < n; ++i) {
        const int v = x.vote(i, j) + 1;
        acc[v][1] += gamma[i];
        acc[v][0] += 1.0 - gamma[i];
      }
      for (int c = 0; c < 2; ++c) {
        const double total = acc[0][c] + acc[1][c] + acc[2][c];
        for (int v = 0; v < 3; ++v) model.table[j][v][c] = acc[v][c] / total;
      }
    }
    model.prior = prior;

    // E-step: posterior log odds over the three-symbol emissions.
    double max_delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double updated;
      if (all_abstain[i]) {
        updated = prior;
      } else {
        double s = std::log(prior) - std::log(1.0 - prior);
        for (std::size_t j = 0; j < m; ++j) {
          const int v = x.vote(i, j) + 1;
          s += std::log(model.table[j][v][1]) -
               std::log(model.table[j][v][0]);
        }
        updated = 1.0 / (1.0 + std::exp(-s));
      }
      max_delta = std::max(max_delta, std::fabs(updated - gamma[i]));
      gamma[i] = updated;
    }
    if (max_delta < tol) break;
  }

  DawidSkeneResult result;
  result.probs = ProbAssignment(x.pairs(), gamma);
  result.model = std::move(model);
  result.iterations = iterations;
  return result;
}

}  // namespace verdict
