#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "verdict/data.hpp"
#include "verdict/error.hpp"
#include "verdict/rng.hpp"

namespace verdict {

struct SynthLf {
  double accuracy = 0.8;      // P(correct vote | votes)
  double abstain_rate = 0.3;
  int duplicate_of = -1;      // copies that column when >= 0
  double duplicate_flip_rate = 0.0;  // per-vote sign-flip noise on the copy
};

struct SynthSpec {
  TaskKind task = TaskKind::kTwoTable;
  int n_pairs = 1000;
  double positive_rate = 0.1;
  std::vector<SynthLf> lfs;
  std::uint64_t seed = 0;

  // Optional entity structure for two-table fixtures: each entity owns one
  // left tuple and a cluster of right duplicates drawn from this
  // distribution. Zero entities means plain independent rows.
  int entities = 0;
  std::vector<std::pair<int, double>> cluster_sizes = {{1, 1.0}};
};

struct SynthResult {
  LabelingMatrix matrix;
  GroundTruth truth;
};

inline SynthResult gen_synth(const SynthSpec& spec) {
  if (spec.lfs.empty())
    throw Error(ErrorKind::kDomain, "need at least one labeling function");
  for (const auto& lf : spec.lfs) {
    if (lf.duplicate_of < 0 &&
        (lf.accuracy <= 0.5 || lf.accuracy > 1.0))
      throw Error(ErrorKind::kDomain, "accuracy must be in (0.5, 1]");
    if (lf.abstain_rate < 0.0 || lf.abstain_rate >= 1.0)
      throw Error(ErrorKind::kDomain, "abstain rate must be in [0,1)");
    if (lf.duplicate_of >= static_cast<int>(spec.lfs.size()))
      throw Error(ErrorKind::kDomain, "duplicate index out of range");
  }
  if (spec.positive_rate <= 0.0 || spec.positive_rate >= 1.0)
    throw Error(ErrorKind::kDomain, "positive rate must be in (0,1)");

  Rng rng = Rng::substream(spec.seed, /*tag=*/0x73796e74u);
  std::vector<PairId> pairs;
  std::vector<int> y;

  if (spec.entities > 0) {
    if (spec.task != TaskKind::kTwoTable)
      throw Error(ErrorKind::kModeMismatch,
                  "entity clustering is a two-table construction");
    double weight_total = 0.0;
    for (const auto& [size, w] : spec.cluster_sizes) weight_total += w;
    std::vector<std::string> right_of_entity_flat;
    std::vector<int> entity_of_right;
    for (int e = 0; e < spec.entities; ++e) {
      double pick = rng.u01() * weight_total;
      int size = spec.cluster_sizes.back().first;
      for (const auto& [s, w] : spec.cluster_sizes) {
        if (pick < w) {
          size = s;
          break;
        }
        pick -= w;
      }
      for (int d = 0; d < size; ++d) {
        right_of_entity_flat.push_back("R" + std::to_string(e) + "_" +
                                       std::to_string(d));
        entity_of_right.push_back(e);
      }
    }
    // Positives: every (left entity, right duplicate) pair.
    for (std::size_t r = 0; r < right_of_entity_flat.size(); ++r) {
      pairs.push_back(PairId::two_table(
          "L" + std::to_string(entity_of_right[r]), right_of_entity_flat[r]));
      y.push_back(1);
    }
    // Negatives: random cross-entity pairs up to n_pairs, duplicates skipped.
    std::set<std::pair<int, std::size_t>> seen;
    int guard = 0;
    while (static_cast<int>(pairs.size()) < spec.n_pairs &&
           guard < spec.n_pairs * 50) {
      ++guard;
      const int e = static_cast<int>(rng.uniform_index(spec.entities));
      const std::size_t r = static_cast<std::size_t>(
          rng.uniform_index(right_of_entity_flat.size()));
      if (entity_of_right[r] == e) continue;
      if (!seen.insert({e, r}).second) continue;
      pairs.push_back(PairId::two_table("L" + std::to_string(e),
                                        right_of_entity_flat[r]));
      y.push_back(-1);
    }
  } else {
    for (int i = 0; i < spec.n_pairs; ++i) {
      y.push_back(rng.u01() < spec.positive_rate ? 1 : -1);
      if (spec.task == TaskKind::kTwoTable)
        pairs.push_back(PairId::two_table("L" + std::to_string(i),
                                          "R" + std::to_string(i)));
      else
        pairs.push_back(PairId::single_table("a" + std::to_string(i),
                                             "b" + std::to_string(i)));
    }
  }

  const std::size_t n = pairs.size();
  const std::size_t m = spec.lfs.size();
  std::vector<std::int8_t> votes(n * m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    const SynthLf& lf = spec.lfs[j];
    if (lf.duplicate_of >= 0) continue;  // second pass
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.u01() < lf.abstain_rate) continue;
      const bool correct = rng.u01() < lf.accuracy;
      votes[i * m + j] = static_cast<std::int8_t>(correct ? y[i] : -y[i]);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const SynthLf& lf = spec.lfs[j];
    if (lf.duplicate_of < 0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      std::int8_t v = votes[i * m + lf.duplicate_of];
      if (v != 0 && lf.duplicate_flip_rate > 0.0 &&
          rng.u01() < lf.duplicate_flip_rate)
        v = static_cast<std::int8_t>(-v);
      votes[i * m + j] = v;
    }
  }
  // The matrix invariant needs one non-abstain vote per column.
  for (std::size_t j = 0; j < m; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < n && !any; ++i) any = votes[i * m + j] != 0;
    if (!any && n > 0) votes[j] = static_cast<std::int8_t>(y[0]);
  }

  SynthResult result;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m; ++j) names.push_back("lf" + std::to_string(j));
  result.matrix = LabelingMatrix(spec.task, pairs, std::move(names),
                                 std::move(votes));
  for (std::size_t i = 0; i < n; ++i) result.truth.labels[pairs[i]] = y[i];
  return result;
}

}  // namespace verdict
