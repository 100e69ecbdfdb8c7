#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "verdict/forest.hpp"
#include "verdict/rng.hpp"

namespace verdict {

struct SmoteConfig {
  int k_neighbors = 5;
  std::uint64_t seed = 0;
};

struct SmoteResult {
  FeatureMatrix features;
  std::vector<int> labels;
};

// Grows the minority class to the majority size by interpolating each base
// point toward one of its k nearest minority neighbours:
// x_new = x_i + u * (x_j - x_i), u ~ U[0,1]. Original rows are kept
// unchanged as a prefix. Vote features stay fractional after interpolation;
// the forest downstream handles continuous values.
inline SmoteResult smote(const FeatureMatrix& features,
                         const std::vector<int>& labels,
                         const SmoteConfig& cfg) {
  SmoteResult out;
  out.features = features;
  out.labels = labels;

  std::vector<std::size_t> pos_rows, neg_rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] > 0 ? pos_rows : neg_rows).push_back(i);
  if (pos_rows.empty() || neg_rows.empty()) return out;  // single class
  const bool pos_minority = pos_rows.size() < neg_rows.size();
  const auto& minority = pos_minority ? pos_rows : neg_rows;
  const auto& majority = pos_minority ? neg_rows : pos_rows;
  const std::size_t deficit = majority.size() - minority.size();
  if (deficit == 0) return out;

  const std::size_t m = features.cols;
  const int minority_label = pos_minority ? 1 : -1;

  // k nearest minority neighbours per minority row; ties by index.
  const std::size_t k = std::min<std::size_t>(
      std::max(cfg.k_neighbors, 1), minority.size() - 1);
  std::vector<std::vector<std::size_t>> neighbours(minority.size());
  if (k > 0) {
    for (std::size_t a = 0; a < minority.size(); ++a) {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(minority.size() - 1);
      for (std::size_t b = 0; b < minority.size(); ++b) {
        if (a == b) continue;
        double d2 = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const double diff =
              features.at(minority[a], c) - features.at(minority[b], c);
          d2 += diff * diff;
        }
        dist.push_back({d2, b});
      }
      std::sort(dist.begin(), dist.end());
      for (std::size_t t = 0; t < k; ++t)
        neighbours[a].push_back(dist[t].second);
    }
  }

  Rng rng = Rng::substream(cfg.seed, /*tag=*/0x736d6f74u);
  for (std::size_t s = 0; s < deficit; ++s) {
    const std::size_t base = s % minority.size();
    const std::size_t i = minority[base];
    std::size_t j = i;  // single-point minority duplicates itself
    if (k > 0)
      j = minority[neighbours[base][rng.uniform_index(k)]];
    const double u = rng.u01();
    for (std::size_t c = 0; c < m; ++c)
      out.features.data.push_back(features.at(i, c) +
                                  u * (features.at(j, c) - features.at(i, c)));
    ++out.features.rows;
    out.labels.push_back(minority_label);
  }
  return out;
}

}  // namespace verdict
