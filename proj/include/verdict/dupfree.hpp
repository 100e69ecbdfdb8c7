#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "verdict/error.hpp"
#include "verdict/logspace.hpp"
#include "verdict/parallel.hpp"
#include "verdict/rng.hpp"

namespace verdict {

// log S2(n, k) for k = 0..k_max via the triangular recurrence
// S2(n,k) = k * S2(n-1,k) + S2(n-1,k-1), carried in log space.
inline std::vector<double> stirling2_log_row(long n, long k_max) {
  if (n < 0 || k_max < 0) throw Error(ErrorKind::kDomain, "negative argument");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> row(static_cast<std::size_t>(k_max) + 1, neg_inf);
  row[0] = 0.0;  // S2(0,0) = 1
  for (long i = 1; i <= n; ++i) {
    const long hi = std::min<long>(i, k_max);
    for (long k = hi; k >= 1; --k)
      row[k] = detail::log_add(std::log(double(k)) + row[k], row[k - 1]);
    row[0] = neg_inf;  // S2(i,0) = 0 for i >= 1
  }
  return row;
}

inline double stirling2_log(long n, long k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  return stirling2_log_row(n, k)[k];
}

// Probability of observing d_r distinct values when |M| items are drawn
// uniformly with replacement from N_r values:
// S2(|M|, d_r) * N_r! / (N_r^|M| * (N_r - d_r)!).
inline double p_dr_given_x0(long m_size, long n_r, long d_r) {
  if (m_size < 1 || n_r < 1) throw Error(ErrorKind::kDomain, "empty instance");
  if (d_r < 1 || d_r > std::min(m_size, n_r)) return 0.0;
  const double lp = stirling2_log(m_size, d_r) + std::lgamma(double(n_r) + 1) -
                    double(m_size) * std::log(double(n_r)) -
                    std::lgamma(double(n_r - d_r) + 1);
  return std::exp(lp);
}

// Upper bound on p(d_r < d_hat, x): the cumulative mass below d_hat in the
// x = 0 (all noise) distribution.
inline double dupfree_bound(long m_size, long n_r, long d_hat) {
  if (d_hat <= 1) return 0.0;  // empty sum
  const long k_max = std::min({d_hat - 1, m_size, n_r});
  const auto row = stirling2_log_row(m_size, k_max);
  const double base = std::lgamma(double(n_r) + 1) -
                      double(m_size) * std::log(double(n_r));
  double acc = -std::numeric_limits<double>::infinity();
  for (long d = 1; d <= k_max; ++d)
    acc = detail::log_add(acc,
                          row[d] + base - std::lgamma(double(n_r - d) + 1));
  return std::min(1.0, std::exp(acc));
}

enum class DupFreeDirection { kTestLeft, kTestRight };

struct DupFreeInput {
  std::vector<std::pair<std::string, std::string>> matches;  // (left, right)
  DupFreeDirection direction = DupFreeDirection::kTestLeft;
  long n_opposite = 0;  // table size on the counted side
  double c = 0.05;
  int sim_repeats = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct DupFreeReport {
  long d_r_observed = 0;
  long x_hat = 0;
  double bound_value = 1.0;
  bool used_simulation = false;
  std::optional<double> p_value_empirical;
  bool reject = false;
};

// Tests the null hypothesis "the tested table is duplicate-free" from the
// predicted match set. Testing the left table counts distinct right tuples;
// duplicates on the left surface as repeated right tuples in M. All-distinct
// observations skip the test entirely: transitivity makes no difference
// there. A cheap closed-form bound rejects outright when possible; otherwise
// the hidden true-positive count x is fitted by simulation over a coarse
// grid and the test runs on the fitted empirical distribution.
inline DupFreeReport dupfree_test(const DupFreeInput& input) {
  const long m_size = static_cast<long>(input.matches.size());
  if (m_size < 1) throw Error(ErrorKind::kEmptyInput, "no matches");
  std::unordered_set<std::string> distinct;
  for (const auto& [l, r] : input.matches)
    distinct.insert(input.direction == DupFreeDirection::kTestLeft ? r : l);
  const long d_hat = static_cast<long>(distinct.size());
  const long n = input.n_opposite;
  if (n < d_hat)
    throw Error(ErrorKind::kDomain,
                "counted-side table smaller than its distinct count");

  DupFreeReport report;
  report.d_r_observed = d_hat;
  if (d_hat == m_size) {
    report.x_hat = m_size;
    report.bound_value = 1.0;
    return report;  // nothing to test
  }

  report.bound_value = dupfree_bound(m_size, n, d_hat);
  if (report.bound_value < input.c) {
    report.reject = true;
    return report;
  }

  // Simulation grid over the hidden true-positive count x.
  const long step = std::max<long>(1, (m_size + 9) / 10);
  std::vector<long> grid;
  for (long x = 0; x < m_size; x += step) grid.push_back(x);
  grid.push_back(m_size);

  struct CellResult {
    double p_at = 0.0;     // empirical p(d_r == d_hat)
    double p_below = 0.0;  // empirical p(d_r < d_hat)
  };
  std::vector<CellResult> cells(grid.size());
  parallel_for(grid.size(), input.threads, [&](std::size_t gi) {
    const long x = grid[gi];
    Rng rng = Rng::substream(input.seed, /*tag=*/0x64757066u, gi);
    std::vector<std::uint32_t> stamp(static_cast<std::size_t>(n) + 1, 0);
    std::uint32_t version = 0;
    long hits_at = 0, hits_below = 0;
    for (int rep = 0; rep < input.sim_repeats; ++rep) {
      ++version;
      long d = x;  // x unique seed values occupy slots 1..x
      for (long s = 1; s <= x; ++s) stamp[s] = version;
      for (long draw = 0; draw < m_size - x; ++draw) {
        const auto val =
            1 + static_cast<std::size_t>(rng.uniform_index(std::uint64_t(n)));
        if (stamp[val] != version) {
          stamp[val] = version;
          ++d;
        }
      }
      if (d == d_hat) ++hits_at;
      if (d < d_hat) ++hits_below;
    }
    cells[gi].p_at = double(hits_at) / input.sim_repeats;
    cells[gi].p_below = double(hits_below) / input.sim_repeats;
  });

  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi)
    if (cells[gi].p_at > cells[best].p_at) best = gi;
  report.used_simulation = true;
  report.x_hat = grid[best];
  report.p_value_empirical = cells[best].p_below;
  report.reject = cells[best].p_below < input.c;
  return report;
}

}  // namespace verdict
