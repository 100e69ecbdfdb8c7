#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "verdict/synth.hpp"

using namespace verdict;

namespace {

TEST(GenSynth, NoiselessVoterEqualsGroundTruth) {
  SynthSpec spec;
  spec.n_pairs = 200;
  spec.positive_rate = 0.3;
  SynthLf lf;
  lf.accuracy = 1.0;
  lf.abstain_rate = 0.0;
  spec.lfs.push_back(lf);
  spec.seed = 1;
  SynthResult r = gen_synth(spec);
  for (std::size_t i = 0; i < r.matrix.rows(); ++i)
    EXPECT_EQ(r.matrix.vote(i, 0),
              r.truth.labels.at(r.matrix.pairs()[i]));
}

TEST(GenSynth, PositiveFractionWithinSamplingNoise) {
  SynthSpec spec;
  spec.n_pairs = 2000;
  spec.positive_rate = 0.1;
  SynthLf lf;
  lf.accuracy = 0.9;
  lf.abstain_rate = 0.1;
  spec.lfs.push_back(lf);
  spec.seed = 2;
  SynthResult r = gen_synth(spec);
  int positives = 0;
  for (const auto& [p, y] : r.truth.labels) positives += y > 0 ? 1 : 0;
  const double sigma = std::sqrt(2000 * 0.1 * 0.9);
  EXPECT_NEAR(positives, 200.0, 3 * sigma);
}

TEST(GenSynth, DeterministicForFixedSeed) {
  SynthSpec spec;
  spec.n_pairs = 150;
  spec.positive_rate = 0.2;
  for (double acc : {0.8, 0.7}) {
    SynthLf lf;
    lf.accuracy = acc;
    spec.lfs.push_back(lf);
  }
  spec.seed = 3;
  SynthResult a = gen_synth(spec);
  SynthResult b = gen_synth(spec);
  EXPECT_EQ(a.matrix.votes(), b.matrix.votes());
  EXPECT_EQ(a.matrix.pairs().size(), b.matrix.pairs().size());
}

TEST(GenSynth, ExactDuplicateColumnMatches) {
  SynthSpec spec;
  spec.n_pairs = 300;
  spec.positive_rate = 0.2;
  SynthLf base;
  base.accuracy = 0.7;
  base.abstain_rate = 0.3;
  spec.lfs.push_back(base);
  SynthLf dup;
  dup.duplicate_of = 0;
  spec.lfs.push_back(dup);
  spec.seed = 4;
  SynthResult r = gen_synth(spec);
  for (std::size_t i = 0; i < r.matrix.rows(); ++i)
    EXPECT_EQ(r.matrix.vote(i, 0), r.matrix.vote(i, 1));
}

TEST(GenSynth, EntityClustersProduceDuplicateRightTuples) {
  SynthSpec spec;
  spec.n_pairs = 300;
  spec.positive_rate = 0.2;
  SynthLf lf;
  lf.accuracy = 0.9;
  lf.abstain_rate = 0.1;
  spec.lfs.push_back(lf);
  spec.entities = 40;
  spec.cluster_sizes = {{2, 1.0}};
  spec.seed = 5;
  SynthResult r = gen_synth(spec);
  // Every entity appears with exactly two positive pairs.
  std::map<std::string, int> positive_count;
  for (const auto& [p, y] : r.truth.labels)
    if (y > 0) positive_count[p.a.id] += 1;
  EXPECT_EQ(positive_count.size(), 40u);
  for (const auto& [id, c] : positive_count) EXPECT_EQ(c, 2);
}

TEST(GenSynth, RejectsBadParameters) {
  SynthSpec spec;
  spec.n_pairs = 10;
  SynthLf lf;
  lf.accuracy = 0.4;  // worse than random guessing
  spec.lfs.push_back(lf);
  try {
    gen_synth(spec);
    FAIL() << "expected domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

}  // namespace
