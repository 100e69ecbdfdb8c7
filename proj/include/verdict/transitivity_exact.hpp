#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "verdict/data.hpp"
#include "verdict/error.hpp"

namespace verdict {

inline constexpr double kProbEpsilon = 1e-6;

// Objective increase from zeroing one matching probability:
// ln(1 / (1 - gamma)). Strictly increasing in gamma, so keeping the argmax
// pair minimizes the total increase.
inline double delta_f(double gamma, double eps = kProbEpsilon) {
  gamma = std::min(std::max(gamma, 0.0), 1.0 - eps);
  return std::log(1.0 / (1.0 - gamma));
}

// Tuple graph over a probability assignment: all candidate pairs as weighted
// adjacency, components induced by edges with gamma > 0.5.
struct PairGraph {
  std::vector<TupleRef> nodes;  // sorted
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // all pairs
  std::vector<int> component_of;
  std::vector<std::vector<int>> components;  // each sorted; ordered by head

  int node_index(const TupleRef& t) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t);
    if (it == nodes.end() || !(*it == t)) return -1;
    return static_cast<int>(it - nodes.begin());
  }

  std::size_t match_edge_count() const {
    std::size_t n = 0;
    for (const auto& adj : adjacency)
      for (const auto& [other, g] : adj) n += g > 0.5 ? 1 : 0;
    return n / 2;
  }
};

inline PairGraph build_match_graph(const ProbAssignment& gamma) {
  PairGraph graph;
  graph.nodes.reserve(gamma.size() * 2);
  for (const PairId& p : gamma.pairs()) {
    graph.nodes.push_back(p.a);
    graph.nodes.push_back(p.b);
  }
  std::sort(graph.nodes.begin(), graph.nodes.end());
  graph.nodes.erase(std::unique(graph.nodes.begin(), graph.nodes.end()),
                    graph.nodes.end());
  graph.adjacency.assign(graph.nodes.size(), {});

  std::vector<int> parent(graph.nodes.size());
  for (std::size_t i = 0; i < parent.size(); ++i)
    parent[i] = static_cast<int>(i);
  // Union by smaller root index keeps components independent of edge order.
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const PairId& p = gamma.pairs()[e];
    const double g = gamma.value_at(e);
    const int ia = graph.node_index(p.a);
    const int ib = graph.node_index(p.b);
    graph.adjacency[ia].push_back({ib, g});
    graph.adjacency[ib].push_back({ia, g});
    if (g > 0.5) {
      int ra = find(ia), rb = find(ib);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  for (auto& adj : graph.adjacency) std::sort(adj.begin(), adj.end());

  graph.component_of.assign(graph.nodes.size(), -1);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    int root = find(static_cast<int>(i));
    if (graph.component_of[root] < 0) {
      graph.component_of[root] = static_cast<int>(graph.components.size());
      graph.components.emplace_back();
    }
    graph.component_of[i] = graph.component_of[root];
    graph.components[graph.component_of[root]].push_back(
        static_cast<int>(i));
  }
  return graph;
}

struct FeasibilityViolation {
  TupleRef pivot;  // gamma(pivot,b) * gamma(pivot,c) > gamma(b,c)
  TupleRef b;
  TupleRef c;
  double magnitude = 0.0;
};

// Reports every in-scope transitivity violation
// max(0, gamma(i,j) * gamma(i,k) - gamma(j,k)) over triples whose three
// pairs all exist in the assignment. Empty result means gamma is feasible
// on that scope.
inline std::vector<FeasibilityViolation> check_feasibility(
    const ProbAssignment& gamma, const PairGraph& scope) {
  std::vector<FeasibilityViolation> out;
  for (std::size_t i = 0; i < scope.nodes.size(); ++i) {
    const auto& adj = scope.adjacency[i];
    for (std::size_t a = 0; a < adj.size(); ++a) {
      for (std::size_t b = a + 1; b < adj.size(); ++b) {
        const TupleRef& tj = scope.nodes[adj[a].first];
        const TupleRef& tk = scope.nodes[adj[b].first];
        PairId jk{tj, tk};
        if (tk < tj) jk = PairId{tk, tj};
        if (!gamma.contains(jk)) continue;
        const double v = adj[a].second * adj[b].second - gamma.at(jk);
        if (v > 0.0)
          out.push_back({scope.nodes[i], tj, tk, v});
      }
    }
  }
  return out;
}

// Two-table variant under the duplicate-free convention: same-side pairs on
// a duplicate-free side carry gamma = 0, so any two positive cross pairs
// sharing a tuple on the opposite side violate transitivity.
inline std::vector<FeasibilityViolation> check_feasibility_two_table(
    const ProbAssignment& gamma, bool left_dupfree, bool right_dupfree) {
  std::vector<FeasibilityViolation> out;
  std::map<std::string, std::vector<std::size_t>> by_left, by_right;
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const PairId& p = gamma.pairs()[e];
    if (p.a.side != TableSide::kLeft || p.b.side != TableSide::kRight)
      throw Error(ErrorKind::kModeMismatch, "expected two-table pairs");
    by_left[p.a.id].push_back(e);
    by_right[p.b.id].push_back(e);
  }
  auto scan = [&](const std::map<std::string, std::vector<std::size_t>>& side,
                  bool pivot_on_right) {
    for (const auto& [id, entries] : side) {
      for (std::size_t a = 0; a < entries.size(); ++a) {
        for (std::size_t b = a + 1; b < entries.size(); ++b) {
          const double v =
              gamma.value_at(entries[a]) * gamma.value_at(entries[b]);
          if (v > 0.0) {
            const PairId& pa = gamma.pairs()[entries[a]];
            const PairId& pb = gamma.pairs()[entries[b]];
            if (pivot_on_right)
              out.push_back({pa.b, pa.a, pb.a, v});
            else
              out.push_back({pa.a, pa.b, pb.b, v});
          }
        }
      }
    }
  };
  // Left duplicate-free zeroes left-left pairs, which constrains the pairs
  // sharing a right tuple, and vice versa.
  if (left_dupfree) scan(by_right, /*pivot_on_right=*/true);
  if (right_dupfree) scan(by_left, /*pivot_on_right=*/false);
  return out;
}

// One table known duplicate-free: each tuple on the other side keeps only
// its best-probability partner; everything else drops to zero. Ties keep
// the lexicographically smallest opposing tuple id.
inline ProbAssignment enforce_one_side_dupfree(const ProbAssignment& gamma,
                                               TableSide dupfree_side) {
  if (dupfree_side != TableSide::kLeft && dupfree_side != TableSide::kRight)
    throw Error(ErrorKind::kModeMismatch, "dupfree side must be Left or Right");
  std::map<std::string, std::size_t> best;  // grouped tuple id -> entry
  const bool group_by_right = dupfree_side == TableSide::kLeft;
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const PairId& p = gamma.pairs()[e];
    if (p.a.side != TableSide::kLeft || p.b.side != TableSide::kRight)
      throw Error(ErrorKind::kModeMismatch, "expected two-table pairs");
    const std::string& key = group_by_right ? p.b.id : p.a.id;
    auto [it, inserted] = best.emplace(key, e);
    if (!inserted) {
      const std::size_t cur = it->second;
      const double gv = gamma.value_at(e), cv = gamma.value_at(cur);
      const std::string& opp_new = group_by_right ? p.a.id : p.b.id;
      const std::string& opp_cur = group_by_right ? gamma.pairs()[cur].a.id
                                                  : gamma.pairs()[cur].b.id;
      if (gv > cv || (gv == cv && opp_new < opp_cur)) it->second = e;
    }
  }
  ProbAssignment out;
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const PairId& p = gamma.pairs()[e];
    const std::string& key = group_by_right ? p.b.id : p.a.id;
    out.set(p, best.at(key) == e ? gamma.value_at(e) : 0.0);
  }
  return out;
}

struct SparseCost {
  int left = 0;
  int right = 0;
  double cost = 0.0;
};

struct Assignment {
  std::vector<std::pair<int, int>> matched;  // (left,right), sorted by left
  double objective = 0.0;
};

// Minimum-cost assignment on a sparse bipartite instance via successive
// shortest augmenting paths with potentials (the approach behind the
// Jonker-Volgenant family). Tuples with no affordable partner stay
// unmatched: each row owns a private dummy column priced above any possible
// real improvement, so the result is a maximum-cardinality matching of
// minimum cost over the real edges.
inline Assignment solve_assignment(int n_left, int n_right,
                                   std::vector<SparseCost> entries) {
  if (n_left < 0 || n_right < 0)
    throw Error(ErrorKind::kDomain, "negative side size");
  double abs_sum = 1.0;
  for (const auto& e : entries) {
    if (!(std::isfinite(e.cost)))
      throw Error(ErrorKind::kNumeric, "non-finite assignment cost");
    if (e.left < 0 || e.left >= n_left || e.right < 0 || e.right >= n_right)
      throw Error(ErrorKind::kDomain, "assignment index out of range");
    abs_sum += std::fabs(e.cost);
  }
  std::sort(entries.begin(), entries.end(),
            [](const SparseCost& a, const SparseCost& b) {
              if (a.left != b.left) return a.left < b.left;
              return a.right < b.right;
            });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].left == entries[i - 1].left &&
        entries[i].right == entries[i - 1].right)
      throw Error(ErrorKind::kDomain, "duplicate assignment entry");

  const double big = abs_sum;  // > any real cost swing
  const int cols = n_right + n_left;
  std::vector<std::vector<std::pair<int, double>>> edges(n_left);
  for (const auto& e : entries) edges[e.left].push_back({e.right, e.cost});
  for (int r = 0; r < n_left; ++r) edges[r].push_back({n_right + r, big});

  std::vector<double> u(n_left, 0.0), v(cols, 0.0);
  // Row reduction keeps every reduced cost non-negative from the start,
  // which Dijkstra requires (real costs may be negative).
  for (int r = 0; r < n_left; ++r) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& [c, w] : edges[r]) lo = std::min(lo, w);
    u[r] = lo;
  }

  std::vector<int> match_col(cols, -1), match_row(n_left, -1);
  std::vector<double> dist(cols);
  std::vector<int> pred(cols);
  std::vector<char> done(cols);
  using HeapItem = std::pair<double, int>;

  for (int r0 = 0; r0 < n_left; ++r0) {
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
    auto relax = [&](int row, double base) {
      for (const auto& [c, w] : edges[row]) {
        if (done[c]) continue;
        const double nd = base + w - u[row] - v[c];
        if (nd < dist[c]) {
          dist[c] = nd;
          pred[c] = row;
          heap.push({nd, c});
        }
      }
    };
    std::fill(dist.begin(), dist.end(),
              std::numeric_limits<double>::infinity());
    std::fill(done.begin(), done.end(), 0);
    relax(r0, 0.0);
    int sink = -1;
    double delta = 0.0;
    while (!heap.empty()) {
      auto [d, c] = heap.top();
      heap.pop();
      if (done[c]) continue;
      done[c] = 1;
      if (match_col[c] < 0) {
        sink = c;
        delta = d;
        break;
      }
      relax(match_col[c], d);
    }
    if (sink < 0)
      throw Error(ErrorKind::kNumeric, "augmentation failed");  // unreachable
    for (int c = 0; c < cols; ++c) {
      if (!done[c] || c == sink) continue;
      const double adjust = delta - dist[c];
      v[c] -= adjust;
      if (match_col[c] >= 0) u[match_col[c]] += adjust;
    }
    u[r0] += delta;
    // Augment along the predecessor chain.
    int c = sink;
    while (true) {
      const int row = pred[c];
      const int prev = match_row[row];
      match_col[c] = row;
      match_row[row] = c;
      if (row == r0) break;
      c = prev;
    }
  }

  Assignment result;
  for (int r = 0; r < n_left; ++r) {
    const int c = match_row[r];
    if (c < 0 || c >= n_right) continue;  // dummy: stays unmatched
    result.matched.push_back({r, c});
  }
  std::sort(result.matched.begin(), result.matched.end());
  std::map<std::pair<int, int>, double> cost_of;
  for (const auto& e : entries) cost_of[{e.left, e.right}] = e.cost;
  for (const auto& [l, r] : result.matched)
    result.objective += cost_of.at({l, r});
  return result;
}

// Both tables duplicate-free: keep the matching of candidate pairs that
// minimizes the total objective increase, i.e. maximizes the retained
// delta-F, and zero everything else.
inline ProbAssignment enforce_two_side_dupfree(const ProbAssignment& gamma,
                                               double eps = kProbEpsilon) {
  std::vector<std::string> lefts, rights;
  for (const PairId& p : gamma.pairs()) {
    if (p.a.side != TableSide::kLeft || p.b.side != TableSide::kRight)
      throw Error(ErrorKind::kModeMismatch, "expected two-table pairs");
    lefts.push_back(p.a.id);
    rights.push_back(p.b.id);
  }
  std::sort(lefts.begin(), lefts.end());
  lefts.erase(std::unique(lefts.begin(), lefts.end()), lefts.end());
  std::sort(rights.begin(), rights.end());
  rights.erase(std::unique(rights.begin(), rights.end()), rights.end());
  auto left_index = [&](const std::string& id) {
    return static_cast<int>(
        std::lower_bound(lefts.begin(), lefts.end(), id) - lefts.begin());
  };
  auto right_index = [&](const std::string& id) {
    return static_cast<int>(
        std::lower_bound(rights.begin(), rights.end(), id) - rights.begin());
  };

  std::vector<SparseCost> entries;
  entries.reserve(gamma.size());
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const PairId& p = gamma.pairs()[e];
    entries.push_back({left_index(p.a.id), right_index(p.b.id),
                       -delta_f(gamma.value_at(e), eps)});
  }
  Assignment assignment = solve_assignment(
      static_cast<int>(lefts.size()), static_cast<int>(rights.size()),
      std::move(entries));
  std::set<std::pair<int, int>> kept(assignment.matched.begin(),
                                     assignment.matched.end());

  ProbAssignment out;
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const PairId& p = gamma.pairs()[e];
    const bool keep =
        kept.count({left_index(p.a.id), right_index(p.b.id)}) != 0;
    out.set(p, keep ? gamma.value_at(e) : 0.0);
  }
  return out;
}

}  // namespace verdict
