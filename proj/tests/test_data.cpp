#include <gtest/gtest.h>

#include <sstream>

#include "verdict/data.hpp"

using namespace verdict;

namespace {

LabelingMatrix parse(const std::string& body,
                     TaskKind task = TaskKind::kTwoTable) {
  std::istringstream in(body);
  return load_labeling_matrix(in, task);
}

TEST(LoadMatrix, ParsesVotesExactly) {
  auto x = parse("left_id,right_id,a,b\n1,2,1,0\n1,3,-1,1\n");
  ASSERT_EQ(x.rows(), 2u);
  ASSERT_EQ(x.cols(), 2u);
  EXPECT_EQ(x.vote(0, 0), 1);
  EXPECT_EQ(x.vote(0, 1), 0);
  EXPECT_EQ(x.vote(1, 0), -1);
  EXPECT_EQ(x.vote(1, 1), 1);
  EXPECT_EQ(x.pairs()[0].a.id, "1");
  EXPECT_EQ(x.pairs()[0].b.id, "2");
}

TEST(LoadMatrix, RejectsVoteOutsideDomain) {
  try {
    parse("left_id,right_id,a\n1,2,2\n1,3,1\n");
    FAIL() << "expected domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(LoadMatrix, RejectsDuplicatePair) {
  try {
    parse("left_id,right_id,a\n1,2,1\n1,2,-1\n");
    FAIL() << "expected duplicate error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDuplicatePair);
  }
}

TEST(LoadMatrix, RejectsAllAbstainColumn) {
  try {
    parse("left_id,right_id,a,b\n1,2,1,0\n1,3,-1,0\n");
    FAIL() << "expected degenerate column error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateLf);
  }
}

TEST(LoadMatrix, RejectsRaggedRow) {
  try {
    parse("left_id,right_id,a\n1,2\n");
    FAIL() << "expected malformed csv error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedCsv);
  }
}

TEST(LoadMatrix, RejectsWrongHeaderForTask) {
  try {
    parse("id_a,id_b,a\nx,y,1\n", TaskKind::kTwoTable);
    FAIL() << "expected schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
  }
}

TEST(LoadMatrix, SingleTableCanonicalizesPairOrder) {
  auto x = parse("id_a,id_b,a\nzeta,alpha,1\n", TaskKind::kSingleTable);
  EXPECT_EQ(x.pairs()[0].a.id, "alpha");
  EXPECT_EQ(x.pairs()[0].b.id, "zeta");
  try {
    parse("id_a,id_b,a\nx,x,1\n", TaskKind::kSingleTable);
    FAIL() << "expected self-pair rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(MajorityVote, CountsSignedVotes) {
  auto x = parse(
      "left_id,right_id,a,b,c\n"
      "1,2,1,1,-1\n"
      "1,3,0,0,0\n"
      "1,4,1,-1,0\n");
  ProbAssignment mv = majority_vote(x);
  EXPECT_NEAR(mv.value_at(0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(hard_label(mv.value_at(0)), 1);
  EXPECT_EQ(mv.value_at(1), 0.0);
  EXPECT_EQ(hard_label(mv.value_at(1)), -1);
  EXPECT_EQ(mv.value_at(2), 0.5);
  EXPECT_EQ(hard_label(mv.value_at(2)), -1);  // ties are non-matches
}

TEST(MajorityVote, InvariantToColumnPermutation) {
  auto x = parse(
      "left_id,right_id,a,b,c\n"
      "1,2,1,0,-1\n"
      "2,2,-1,1,1\n"
      "3,2,0,1,-1\n");
  auto y = parse(
      "left_id,right_id,c,a,b\n"
      "1,2,-1,1,0\n"
      "2,2,1,-1,1\n"
      "3,2,-1,0,1\n");
  ProbAssignment mx = majority_vote(x), my = majority_vote(y);
  for (std::size_t i = 0; i < mx.size(); ++i)
    EXPECT_EQ(mx.value_at(i), my.value_at(i));
}

TEST(RoundTrip, MatrixSurvivesSaveLoadSave) {
  auto x = parse("left_id,right_id,a,b\n1,2,1,0\n1,3,-1,1\n9,4,0,-1\n");
  std::ostringstream first;
  save_labeling_matrix(first, x);
  std::istringstream back(first.str());
  auto y = load_labeling_matrix(back, TaskKind::kTwoTable);
  std::ostringstream second;
  save_labeling_matrix(second, y);
  EXPECT_EQ(first.str(), second.str());
}

TEST(RoundTrip, ProbabilitiesSurviveFormatting) {
  ProbAssignment p;
  p.set(PairId::two_table("1", "2"), 0.123456789);
  p.set(PairId::two_table("1", "3"), 1e-6);
  std::ostringstream out;
  save_probabilities(out, p, "seed=7");
  std::istringstream in(out.str());
  ProbAssignment q = load_probabilities(in, TaskKind::kTwoTable);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_NEAR(q.value_at(0), 0.123456789, 1e-9);
  EXPECT_NEAR(q.value_at(1), 1e-6, 1e-15);
}

TEST(F1, PerfectPrediction) {
  GroundTruth gt;
  gt.labels[PairId::two_table("1", "2")] = 1;
  gt.labels[PairId::two_table("1", "3")] = -1;
  ProbAssignment p;
  p.set(PairId::two_table("1", "2"), 0.9);
  p.set(PairId::two_table("1", "3"), 0.1);
  MatchMetrics m = f1_score(p, gt);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(F1, AllNegativePredictionScoresZero) {
  GroundTruth gt;
  gt.labels[PairId::two_table("1", "2")] = 1;
  gt.labels[PairId::two_table("1", "3")] = -1;
  ProbAssignment p;
  p.set(PairId::two_table("1", "2"), 0.2);
  p.set(PairId::two_table("1", "3"), 0.2);
  MatchMetrics m = f1_score(p, gt);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.0);
}

TEST(F1, CountsFromConfusionCells) {
  GroundTruth gt;
  // 2 TP, 1 FP, 1 FN
  gt.labels[PairId::two_table("1", "a")] = 1;
  gt.labels[PairId::two_table("2", "a")] = 1;
  gt.labels[PairId::two_table("3", "a")] = -1;
  gt.labels[PairId::two_table("4", "a")] = 1;
  ProbAssignment p;
  p.set(PairId::two_table("1", "a"), 0.9);
  p.set(PairId::two_table("2", "a"), 0.9);
  p.set(PairId::two_table("3", "a"), 0.9);
  p.set(PairId::two_table("4", "a"), 0.1);
  MatchMetrics m = f1_score(p, gt);
  EXPECT_NEAR(m.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
}

TEST(F1, PartialGroundTruthRestrictsScoring) {
  GroundTruth gt;
  gt.partial = true;
  gt.labels[PairId::two_table("1", "a")] = 1;
  ProbAssignment p;
  p.set(PairId::two_table("1", "a"), 0.9);
  p.set(PairId::two_table("2", "a"), 0.9);  // unlabeled, ignored
  MatchMetrics m = f1_score(p, gt);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(F1, EmptyIntersectionIsAnError) {
  GroundTruth gt;
  gt.labels[PairId::two_table("9", "9")] = 1;
  ProbAssignment p;
  p.set(PairId::two_table("1", "a"), 0.9);
  try {
    f1_score(p, gt);
    FAIL() << "expected empty-intersection error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyInput);
  }
}

}  // namespace
