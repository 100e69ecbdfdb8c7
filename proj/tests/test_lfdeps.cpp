#include <gtest/gtest.h>

#include <cmath>

#include "verdict/lf_dependency.hpp"
#include "verdict/rng.hpp"

using namespace verdict;

namespace {

SplitLf positive_split(std::string name, std::vector<std::int8_t> votes) {
  SplitLf lf;
  lf.polarity = Polarity::kPositive;
  lf.name = std::move(name);
  lf.votes = std::move(votes);
  for (auto v : lf.votes) lf.vote_count += v != 0 ? 1 : 0;
  return lf;
}

// Positive-only voter: +1 with rate q_pos on true matches, q_neg on
// non-matches.
std::vector<std::int8_t> simulate_positive_lf(const std::vector<int>& y,
                                              double q_pos, double q_neg,
                                              Rng& rng) {
  std::vector<std::int8_t> votes(y.size(), 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = y[i] > 0 ? q_pos : q_neg;
    if (rng.u01() < q) votes[i] = 1;
  }
  return votes;
}

std::vector<int> simulate_labels(std::size_t n, double pos_rate, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = rng.u01() < pos_rate ? 1 : -1;
  return y;
}

TEST(SplitLfs, SplitsAndDropsEmptyHalves) {
  std::istringstream in(
      "left_id,right_id,mixed,onlypos\n"
      "1,a,1,1\n"
      "2,a,-1,0\n"
      "3,a,0,1\n");
  LabelingMatrix x = load_labeling_matrix(in, TaskKind::kTwoTable);
  auto splits = split_lfs(x);
  ASSERT_EQ(splits.size(), 3u);  // mixed+, mixed-, onlypos+
  EXPECT_EQ(splits[0].name, "mixed+");
  EXPECT_EQ(splits[0].votes, (std::vector<std::int8_t>{1, 0, 0}));
  EXPECT_EQ(splits[1].name, "mixed-");
  EXPECT_EQ(splits[1].votes, (std::vector<std::int8_t>{0, -1, 0}));
  EXPECT_EQ(splits[2].name, "onlypos+");
  // Reconstruction: positive + negative = original column.
  for (std::size_t i = 0; i < x.rows(); ++i)
    EXPECT_EQ(splits[0].votes[i] + splits[1].votes[i], x.vote(i, 0));
}

TEST(CountsTable, CountsAllEightCells) {
  SplitLf a = positive_split("a+", {1, 1, 0, 0, 1, 0});
  SplitLf b = positive_split("b+", {1, 0, 1, 0, 1, 0});
  std::vector<int> y = {1, 1, 1, -1, -1, -1};
  DependencyCounts c = counts_table(a, b, y);
  EXPECT_EQ(c.at(1, 1, 1), 1);  // row 0
  EXPECT_EQ(c.at(1, 0, 1), 1);  // row 1
  EXPECT_EQ(c.at(0, 1, 1), 1);  // row 2
  EXPECT_EQ(c.at(0, 0, 1), 0);
  EXPECT_EQ(c.at(1, 1, 0), 1);  // row 4: shared mistake
  EXPECT_EQ(c.at(1, 0, 0), 0);
  EXPECT_EQ(c.at(0, 1, 0), 0);
  EXPECT_EQ(c.at(0, 0, 0), 2);  // rows 3, 5
  EXPECT_EQ(c.n_pos, 3);
  EXPECT_EQ(c.n_neg, 3);
  EXPECT_EQ(c.n1, 3);
  EXPECT_EQ(c.n2, 3);
}

TEST(CountsTable, IdenticalVotersShareEverything) {
  SplitLf a = positive_split("a+", {1, 0, 1, 0});
  DependencyCounts c = counts_table(a, a, {1, 1, -1, -1});
  EXPECT_EQ(c.at(1, 1, 1), 1);
  EXPECT_EQ(c.at(1, 1, 0), 1);
  EXPECT_EQ(c.at(1, 0, 1) + c.at(0, 1, 1), 0);
}

TEST(CountsTable, CrossPolarityIsRejected) {
  SplitLf a = positive_split("a+", {1, 0});
  SplitLf b;
  b.polarity = Polarity::kNegative;
  b.votes = {0, -1};
  b.vote_count = 1;
  try {
    counts_table(a, b, {1, -1});
    FAIL() << "expected polarity mismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kModeMismatch);
  }
}

TEST(EstimateHidden, NoFalsePositivesPinsConfidentCount) {
  // LF1 votes on 6 of 10 true matches and never on a non-match.
  SplitLf a = positive_split(
      "a+", {1, 1, 1, 1, 1, 1, 0, 0, 0, 0,
             0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  SplitLf b = positive_split(
      "b+", {1, 1, 0, 0, 0, 0, 1, 0, 0, 0,
             0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  std::vector<int> y(30, -1);
  for (int i = 0; i < 10; ++i) y[i] = 1;
  DependencyCounts c = counts_table(a, b, y);
  HiddenVoteEstimate est = estimate_hidden(c);
  EXPECT_EQ(est.t1, 6);
  // Exhaustive scan over the t1 grid confirms the maximizer.
  for (long t1 = 0; t1 <= 6; ++t1) {
    const double lp = detail::dependency_log_likelihood(
        c, t1, est.t21, est.t22, est.t23, est.effective_z25);
    EXPECT_LE(lp, est.log_likelihood + 1e-9) << "t1=" << t1;
  }
}

TEST(EstimateHidden, AbstainingSecondVoterHasNoConfidentVotes) {
  SplitLf a = positive_split("a+", {1, 1, 0, 0});
  SplitLf b = positive_split("b+", {0, 0, 0, 0});
  b.vote_count = 0;
  DependencyCounts c = counts_table(a, b, {1, -1, 1, -1});
  HiddenVoteEstimate est = estimate_hidden(c);
  EXPECT_EQ(est.t21 + est.t22 + est.t23, 0);
}

TEST(EstimateHidden, ReturnedPointBeatsGridNeighbours) {
  Rng rng(42);
  std::vector<int> y = simulate_labels(400, 0.2, rng);
  SplitLf a = positive_split("a+", simulate_positive_lf(y, 0.6, 0.05, rng));
  SplitLf b = positive_split("b+", simulate_positive_lf(y, 0.5, 0.08, rng));
  DependencyCounts c = counts_table(a, b, y);
  HiddenVoteEstimate est = estimate_hidden(c);
  ASSERT_TRUE(std::isfinite(est.log_likelihood));
  for (long dt : {-1L, 1L}) {
    const double lp = detail::dependency_log_likelihood(
        c, est.t1 + dt, est.t21, est.t22, est.t23, est.effective_z25);
    EXPECT_LE(lp, est.log_likelihood + 1e-6);
  }
}

TEST(Likelihood, FiniteAtTenMillionCounts) {
  DependencyCounts c;
  c.cell[1][1][1] = 400000;
  c.cell[1][0][1] = 300000;
  c.cell[0][1][1] = 350000;
  c.cell[0][0][1] = 150000;
  c.cell[1][1][0] = 90000;
  c.cell[1][0][0] = 700000;
  c.cell[0][1][0] = 650000;
  c.cell[0][0][0] = 7360000;
  c.n_pos = 1200000;
  c.n_neg = 8800000;
  c.n1 = 1490000;
  c.n2 = 1490000;
  const double lp = detail::dependency_log_likelihood(
      c, 200000, 150000, 50000, 100000, double(c.cell[0][0][0]));
  EXPECT_TRUE(std::isfinite(lp));
}

TEST(OverlapTest, HypergeometricMassNormalizes) {
  // Interior pmf with integer parameters sums to one over its support.
  const double pop = 30, succ = 8, draws = 10;
  double total = 0.0;
  for (long k = 0; k <= 8; ++k)
    total += std::exp(detail::lchoose(succ, double(k)) +
                      detail::lchoose(pop - succ, draws - double(k)) -
                      detail::lchoose(pop, draws));
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(OverlapTest, ZeroObservedOverlapNeverRejects) {
  Rng rng(7);
  std::vector<int> y = simulate_labels(300, 0.2, rng);
  SplitLf a = positive_split("a+", simulate_positive_lf(y, 0.5, 0.03, rng));
  SplitLf b = positive_split("b+", simulate_positive_lf(y, 0.5, 0.03, rng));
  DependencyCounts c = counts_table(a, b, y);
  c.cell[1][1][0] = 0;  // force zero mistake overlap
  HiddenVoteEstimate est = estimate_hidden(c);
  OverlapTestResult r = overlap_test(c, est, 0.05);
  EXPECT_FALSE(r.reject);
}

TEST(OverlapTest, DetectsCopiedVoter) {
  int rejections = 0;
  const int seeds = 6;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(1000 + seed);
    std::vector<int> y = simulate_labels(2000, 0.1, rng);
    auto votes1 = simulate_positive_lf(y, 0.5, 0.05, rng);
    auto votes2 = votes1;
    for (auto& v : votes2)
      if (rng.u01() < 0.05) v = v ? 0 : 1;  // 5% independent flips
    SplitLf a = positive_split("a+", std::move(votes1));
    SplitLf b = positive_split("b+", std::move(votes2));
    DependencyCounts c = counts_table(a, b, y);
    HiddenVoteEstimate est = estimate_hidden(c);
    if (overlap_test(c, est, 0.05).reject) ++rejections;
  }
  EXPECT_GE(rejections, seeds - 1);
}

TEST(OverlapTest, MostlyAcceptsIndependentVoters) {
  int rejections = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(5000 + seed);
    std::vector<int> y = simulate_labels(2000, 0.1, rng);
    SplitLf a = positive_split("a+", simulate_positive_lf(y, 0.5, 0.05, rng));
    SplitLf b = positive_split("b+", simulate_positive_lf(y, 0.6, 0.04, rng));
    DependencyCounts c = counts_table(a, b, y);
    HiddenVoteEstimate est = estimate_hidden(c);
    if (overlap_test(c, est, 0.05).reject) ++rejections;
  }
  EXPECT_LE(rejections, 1);
}

TEST(ChordlessCycle, FourCycleIsFoundAndChordKillsIt) {
  auto adj = std::vector<std::vector<char>>(4, std::vector<char>(4, 0));
  auto connect = [&](int a, int b) { adj[a][b] = adj[b][a] = 1; };
  connect(0, 1);
  connect(1, 2);
  connect(2, 3);
  connect(3, 0);
  auto cycle = detail::find_chordless_cycle(4, adj);
  EXPECT_EQ(cycle.size(), 4u);
  connect(0, 2);  // chord
  EXPECT_TRUE(detail::find_chordless_cycle(4, adj).empty());
}

TEST(ChordlessCycle, TriangleIsChordal) {
  auto adj = std::vector<std::vector<char>>(3, std::vector<char>(3, 0));
  adj[0][1] = adj[1][0] = 1;
  adj[1][2] = adj[2][1] = 1;
  adj[0][2] = adj[2][0] = 1;
  EXPECT_TRUE(detail::find_chordless_cycle(3, adj).empty());
}

LabelingMatrix duplicated_column_matrix(std::vector<int>* y_out,
                                        std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 600;
  std::vector<int> y = simulate_labels(n, 0.2, rng);
  std::vector<std::int8_t> votes(n * 4, 0);
  auto fill = [&](std::size_t col, double acc, double abstain) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.u01() < abstain) continue;
      votes[i * 4 + col] =
          static_cast<std::int8_t>(rng.u01() < acc ? y[i] : -y[i]);
    }
  };
  fill(0, 0.7, 0.2);
  fill(1, 0.85, 0.2);
  fill(2, 0.85, 0.2);
  for (std::size_t i = 0; i < n; ++i)
    votes[i * 4 + 3] = votes[i * 4 + 0];  // exact duplicate of column 0
  std::vector<PairId> pairs;
  for (std::size_t i = 0; i < n; ++i)
    pairs.push_back(PairId::two_table("L" + std::to_string(i),
                                      "R" + std::to_string(i)));
  *y_out = y;
  return LabelingMatrix(TaskKind::kTwoTable, pairs,
                        {"lf0", "lf1", "lf2", "lf0copy"}, votes);
}

TEST(DependencyGraph, FlagsDuplicatedColumn) {
  std::vector<int> y;
  LabelingMatrix x = duplicated_column_matrix(&y, 99);
  ProbAssignment gamma;
  for (std::size_t i = 0; i < x.rows(); ++i)
    gamma.set(x.pairs()[i], y[i] > 0 ? 1.0 : 0.0);
  DependencyGraph g = infer_dependency_graph(x, gamma, 0.05, 3);
  EXPECT_LE(g.rounds_used, 2);

  auto split_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i].name == name) return static_cast<int>(i);
    return -1;
  };
  const int pos0 = split_index("lf0+"), pos3 = split_index("lf0copy+");
  const int neg0 = split_index("lf0-"), neg3 = split_index("lf0copy-");
  ASSERT_GE(pos0, 0);
  ASSERT_GE(pos3, 0);
  bool pos_edge = false, neg_edge = false;
  for (const auto& t : g.tests) {
    if (!t.dependent) continue;
    if ((t.split_a == std::min(pos0, pos3) &&
         t.split_b == std::max(pos0, pos3)))
      pos_edge = true;
    if ((t.split_a == std::min(neg0, neg3) &&
         t.split_b == std::max(neg0, neg3)))
      neg_edge = true;
  }
  EXPECT_TRUE(pos_edge) << "positive splits of the duplicate not flagged";
  EXPECT_TRUE(neg_edge) << "negative splits of the duplicate not flagged";
}

TEST(DependencyGraph, DeterministicAndStable) {
  std::vector<int> y;
  LabelingMatrix x = duplicated_column_matrix(&y, 123);
  ProbAssignment gamma;
  for (std::size_t i = 0; i < x.rows(); ++i)
    gamma.set(x.pairs()[i], y[i] > 0 ? 1.0 : 0.0);
  DependencyGraph a = infer_dependency_graph(x, gamma, 0.05, 3, 1);
  DependencyGraph b = infer_dependency_graph(x, gamma, 0.05, 3, 4);
  ASSERT_EQ(a.tests.size(), b.tests.size());
  for (std::size_t i = 0; i < a.tests.size(); ++i) {
    EXPECT_EQ(a.tests[i].dependent, b.tests[i].dependent);
    EXPECT_EQ(a.tests[i].p_value_bound, b.tests[i].p_value_bound);
  }
  EXPECT_EQ(a.edges(), b.edges());
}

TEST(DependencyReport, SortedCsvWithPolarity) {
  std::vector<int> y;
  LabelingMatrix x = duplicated_column_matrix(&y, 7);
  ProbAssignment gamma;
  for (std::size_t i = 0; i < x.rows(); ++i)
    gamma.set(x.pairs()[i], y[i] > 0 ? 1.0 : 0.0);
  DependencyGraph g = infer_dependency_graph(x, gamma, 0.05, 3);
  std::ostringstream out;
  save_dependency_report(out, g, "seed=7");
  const std::string body = out.str();
  EXPECT_NE(body.find("lf_a,polarity_a,lf_b,polarity_b"), std::string::npos);
  EXPECT_NE(body.find("pos"), std::string::npos);
  EXPECT_NE(body.find("true"), std::string::npos);
}

}  // namespace
