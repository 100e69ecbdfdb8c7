// Generates a small noisy voting fixture, runs the forest EM and the two
// baselines on it, and prints the resulting F1 scores.

#include <iostream>

#include "verdict/verdict.hpp"

int main() {
  using namespace verdict;

  SynthSpec spec;
  spec.task = TaskKind::kTwoTable;
  spec.n_pairs = 800;
  spec.positive_rate = 0.15;
  for (double acc : {0.9, 0.8, 0.7, 0.65}) {
    SynthLf lf;
    lf.accuracy = acc;
    lf.abstain_rate = 0.25;
    spec.lfs.push_back(lf);
  }
  spec.seed = 7;
  SynthResult data = gen_synth(spec);

  EmConfig cfg;
  cfg.seed = 7;
  EmResult em = simple_infer(data.matrix, cfg);

  const MatchMetrics mv = f1_score(majority_vote(data.matrix), data.truth);
  const MatchMetrics ds =
      f1_score(dawid_skene(data.matrix).probs, data.truth);
  const MatchMetrics forest_em = f1_score(em.probs, data.truth);

  std::cout << "majority vote f1: " << mv.f1 << '\n'
            << "dawid-skene  f1: " << ds.f1 << '\n'
            << "forest em    f1: " << forest_em.f1 << " ("
            << em.iterations.size() << " iterations)\n";
  return 0;
}
