// Acceptance suite: one test per shipped guarantee, each printing a
// PASS/FAIL line. Scales are chosen so the whole binary stays inside its
// time budget on a single core.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "verdict/verdict.hpp"

using namespace verdict;
namespace fs = std::filesystem;

namespace {

class Criterion {
 public:
  Criterion(int number, std::string name)
      : number_(number), name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {}
  ~Criterion() {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    std::printf("[CRITERION %d] %s - %s (%.1fs)\n", number_,
                ::testing::Test::HasFailure() ? "FAIL" : "PASS",
                name_.c_str(), seconds);
    std::fflush(stdout);
  }

 private:
  int number_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

TEST(Acceptance, C01_AssignmentOptimality) {
  Criterion c(1, "assignment objective equals brute-force permutation oracle");
  Rng rng(20240001);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = 1 + int(rng.uniform_index(7));
    const int cols = 1 + int(rng.uniform_index(7));
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    std::vector<SparseCost> entries;
    for (int r = 0; r < rows; ++r)
      for (int cidx = 0; cidx < cols; ++cidx) {
        cost[r][cidx] = double(rng.uniform_int(-100, 100));
        entries.push_back({r, cidx, cost[r][cidx]});
      }
    const Assignment got = solve_assignment(rows, cols, entries);
    const double want = oracle::assignment_min_cost(cost);
    ASSERT_EQ(got.objective, want) << "trial " << trial;
  }
}

TEST(Acceptance, C02_ExactTransitivityFeasibility) {
  Criterion c(2, "exact enforcement leaves zero violations, degree <= 1");
  Rng rng(20240002);
  for (int trial = 0; trial < 100; ++trial) {
    ProbAssignment gamma;
    const int nl = 2 + int(rng.uniform_index(10));
    const int nr = 2 + int(rng.uniform_index(10));
    for (int l = 0; l < nl; ++l)
      for (int r = 0; r < nr; ++r)
        if (rng.u01() < 0.65)
          gamma.set(PairId::two_table("l" + std::to_string(l),
                                      "r" + std::to_string(r)),
                    rng.u01());
    if (gamma.size() == 0) continue;

    auto degree_ok = [&](const ProbAssignment& probs, bool check_left,
                         bool check_right) {
      std::map<std::string, int> left, right;
      for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs.value_at(i) > 0.0) {
          left[probs.pairs()[i].a.id] += 1;
          right[probs.pairs()[i].b.id] += 1;
        }
      if (check_left)
        for (const auto& [id, d] : left)
          if (d > 1) return false;
      if (check_right)
        for (const auto& [id, d] : right)
          if (d > 1) return false;
      return true;
    };

    ProbAssignment left = enforce_one_side_dupfree(gamma, TableSide::kLeft);
    ASSERT_TRUE(check_feasibility_two_table(left, true, false).empty());
    ASSERT_TRUE(degree_ok(left, false, true));  // each right tuple once

    ProbAssignment right = enforce_one_side_dupfree(gamma, TableSide::kRight);
    ASSERT_TRUE(check_feasibility_two_table(right, false, true).empty());
    ASSERT_TRUE(degree_ok(right, true, false));

    ProbAssignment both = enforce_two_side_dupfree(gamma);
    ASSERT_TRUE(check_feasibility_two_table(both, true, true).empty());
    ASSERT_TRUE(degree_ok(both, true, true));
  }
}

SynthSpec headline_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.task = TaskKind::kTwoTable;
  spec.n_pairs = 2000;
  spec.positive_rate = 0.1;
  for (double acc : {0.9, 0.85, 0.8, 0.7, 0.6}) {
    SynthLf lf;
    lf.accuracy = acc;
    lf.abstain_rate = 0.3;
    spec.lfs.push_back(lf);
  }
  SynthLf dup;  // sixth voter: exact copy of the weakest one
  dup.duplicate_of = 4;
  spec.lfs.push_back(dup);
  spec.seed = seed;
  return spec;
}

TEST(Acceptance, C03_ForestEmBeatsBaselinesOnSyntheticOracle) {
  Criterion c(3, "forest EM >= MV - 0.01 and >= D&S - 0.02 over 5 seeds");
  double mv = 0.0, ds = 0.0, em = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthResult data = gen_synth(headline_spec(1000 + seed));
    mv += f1_score(majority_vote(data.matrix), data.truth).f1;
    ds += f1_score(dawid_skene(data.matrix).probs, data.truth).f1;
    EmConfig cfg;
    cfg.seed = seed;
    EmResult r = simple_infer(data.matrix, cfg);
    EXPECT_TRUE(r.converged) << "seed " << seed;
    em += f1_score(r.probs, data.truth).f1;
  }
  mv /= 5;
  ds /= 5;
  em /= 5;
  std::printf("  mean F1: forest-em %.4f, majority vote %.4f, "
              "dawid-skene %.4f\n", em, mv, ds);
  EXPECT_GE(em, mv - 0.01);
  EXPECT_GE(em, ds - 0.02);
}

TEST(Acceptance, C04_EmLoopBoundsAndThreadDeterminism) {
  Criterion c(4, "EM converges within 10 iterations; 1 vs 8 threads equal");
  // Fixture battery: the headline generator, a smaller noisy one, and a
  // two-table fixture running the exact constrained E-step.
  std::vector<SynthSpec> specs;
  specs.push_back(headline_spec(42));
  {
    SynthSpec s;
    s.n_pairs = 500;
    s.positive_rate = 0.25;
    for (double acc : {0.8, 0.7, 0.65}) {
      SynthLf lf;
      lf.accuracy = acc;
      lf.abstain_rate = 0.25;
      s.lfs.push_back(lf);
    }
    s.seed = 43;
    specs.push_back(s);
  }
  {
    SynthSpec s;
    s.n_pairs = 400;
    s.positive_rate = 0.2;
    s.entities = 120;
    s.cluster_sizes = {{1, 1.0}};
    for (double acc : {0.9, 0.85, 0.8}) {
      SynthLf lf;
      lf.accuracy = acc;
      lf.abstain_rate = 0.2;
      s.lfs.push_back(lf);
    }
    s.seed = 44;
    specs.push_back(s);
  }
  for (std::size_t fi = 0; fi < specs.size(); ++fi) {
    SynthResult data = gen_synth(specs[fi]);
    EmConfig cfg;
    cfg.seed = 7 * (fi + 1);
    if (fi == 2) cfg.transitivity_mode = TransitivityMode::kExactTwoSide;
    cfg.threads = 1;
    EmResult serial = fi == 2 ? simple_em_infer(data.matrix, cfg)
                              : simple_infer(data.matrix, cfg);
    EXPECT_TRUE(serial.converged) << "fixture " << fi;
    EXPECT_LE(serial.iterations.size(), 10u);
    EXPECT_LT(serial.iterations.back().flip_fraction, 0.001);
    cfg.threads = 8;
    EmResult wide = fi == 2 ? simple_em_infer(data.matrix, cfg)
                            : simple_infer(data.matrix, cfg);
    ASSERT_EQ(serial.probs.size(), wide.probs.size());
    for (std::size_t i = 0; i < serial.probs.size(); ++i)
      ASSERT_EQ(serial.probs.value_at(i), wide.probs.value_at(i))
          << "fixture " << fi << " row " << i;
  }
}

TEST(Acceptance, C05_GeneratedPairsFeasibleAndNearOracle) {
  Criterion c(5, "1000 generated pairs feasible; tiny instances near oracle");
  TrainGenConfig cfg;  // library defaults: alpha 100, 2000 steps, lr 0.01
  cfg.matrix_count = 1000;
  cfg.seed = 20240005;
  auto pairs = gen_training_set(cfg, 1);
  int feasible = 0, improved = 0;
  for (const auto& p : pairs) {
    feasible += transitivity_loss(p.g_constrained) <= 1e-3 ? 1 : 0;
    improved += gen_loss(p.g_star, p.g_constrained, cfg.alpha) <=
                        gen_loss(p.g_star, p.g_star, cfg.alpha) + 1e-9
                    ? 1
                    : 0;
  }
  std::printf("  feasible %d/1000, non-increasing loss %d/1000\n", feasible,
              improved);
  EXPECT_EQ(feasible, 1000);
  EXPECT_EQ(improved, 1000);

  // Tiny embeddings against the independent dense solver.
  Rng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + int(rng.uniform_index(3));  // 4..6 active tuples
    std::vector<std::vector<double>> star_block(n, std::vector<double>(n, 1.0));
    Mat32 star;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double v = rng.u01();
        star_block[i][j] = star_block[j][i] = v;
        star.set_sym(i, j, v);
      }
    const Mat32 solved = constrain_matrix(star, cfg);
    std::vector<std::vector<double>> solved_block(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) solved_block[i][j] = solved.at(i, j);

    oracle::TinyConstrainedSolver solver(star_block, cfg.alpha, 0.02);
    Rng oracle_rng(9000 + trial);
    const auto reference = solver.solve(oracle_rng);
    const double oracle_loss = solver.loss(reference);
    const double generated_loss = solver.loss(solved_block);
    EXPECT_LE(generated_loss, 1.05 * oracle_loss + 1e-4)
        << "trial " << trial << ": generated " << generated_loss
        << " vs oracle " << oracle_loss;
  }
}

TEST(Acceptance, C06_InvarianceSpectralAndGradientChecks) {
  Criterion c(6, "net invariance 1e-12; residual 1e-8; gradcheck 1e-4");
  // Invariance under group-preserving row permutations of V.
  TransitivityNet net = init_net(NetDims{}, 606);
  Rng rng(607);
  for (int trial = 0; trial < 100; ++trial) {
    SpectralFeatures f;
    for (auto& v : f.V) v = 2.0 * rng.u01() - 1.0;
    for (auto& v : f.w) v = 2.0 * rng.u01() - 1.0;
    const double base = net_forward(net, f);
    SpectralFeatures g1_swap = f;
    for (int col = 0; col < kNetTuples; ++col)
      std::swap(g1_swap.v_at(0, col), g1_swap.v_at(1, col));
    ASSERT_NEAR(net_forward(net, g1_swap), base, 1e-12);
    SpectralFeatures g2_perm = f;
    std::vector<int> perm(kNetTuples - 2);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = 2 + int(i);
    rng.shuffle(perm);
    for (int r = 2; r < kNetTuples; ++r)
      for (int col = 0; col < kNetTuples; ++col)
        g2_perm.v_at(r, col) = f.v_at(perm[r - 2], col);
    ASSERT_NEAR(net_forward(net, g2_perm), base, 1e-12);
  }

  // Spectral reconstruction.
  for (int trial = 0; trial < 100; ++trial) {
    Mat32 g;
    for (int i = 0; i < kNetTuples; ++i)
      for (int j = i + 1; j < kNetTuples; ++j)
        g.set_sym(i, j, 2.0 * rng.u01() - 1.0);
    SpectralFeatures f = spectral_features(g);
    double residual = 0.0;
    for (int r = 0; r < kNetTuples; ++r)
      for (int col = 0; col < kNetTuples; ++col) {
        double acc = 0.0;
        for (int k = 0; k < kNetTuples; ++k)
          acc += f.v_at(r, k) * f.w[k] * f.v_at(col, k);
        residual = std::max(residual, std::fabs(acc - g.at(r, col)));
      }
    ASSERT_LE(residual, 1e-8);
  }

  // Gradient check on a small-dimension trainer.
  NetDims dims;
  dims.enc_hidden = 8;
  dims.enc_out = 6;
  dims.head_hidden = 5;
  TransitivityNet small = init_net(dims, 608);
  detail::for_each_param(small, [](double& w) { w *= 0.25; });
  std::vector<NetExample> examples(4);
  for (auto& ex : examples) {
    for (auto& v : ex.features.V) v = 2.0 * rng.u01() - 1.0;
    for (auto& v : ex.features.w) v = 2.0 * rng.u01() - 1.0;
    ex.target = rng.u01();
  }
  const std::vector<double> analytic = net_loss_gradient(small, examples);
  std::vector<double*> slots;
  detail::for_each_param(small, [&](double& w) { slots.push_back(&w); });
  const double h = 1e-6;
  double diff2 = 0.0, ana2 = 0.0, num2 = 0.0;
  for (std::size_t p = 0; p < slots.size(); ++p) {
    const double keep = *slots[p];
    *slots[p] = keep + h;
    const double up = net_dataset_loss(small, examples);
    *slots[p] = keep - h;
    const double down = net_dataset_loss(small, examples);
    *slots[p] = keep;
    const double numeric = (up - down) / (2 * h);
    diff2 += (numeric - analytic[p]) * (numeric - analytic[p]);
    ana2 += analytic[p] * analytic[p];
    num2 += numeric * numeric;
  }
  const double rel =
      std::sqrt(diff2) / std::max(1e-12, std::sqrt(ana2) + std::sqrt(num2));
  std::printf("  gradient relative error %.2e\n", rel);
  EXPECT_LE(rel, 1e-4);
}

TEST(Acceptance, C07_DupfreeTestCalibration) {
  Criterion c(7, "dup-free corpora accepted, duplicate-heavy rejected");
  int clean_rejections = 0, heavy_rejections = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(4000 + seed);
    // Duplicate-free scenario: 180 one-to-one matches + 10% noise pairs.
    DupFreeInput clean;
    clean.direction = DupFreeDirection::kTestLeft;
    clean.n_opposite = 1000;
    clean.seed = seed;
    auto rights = rng.sample_without_replacement(1000, 180);
    for (int i = 0; i < 180; ++i)
      clean.matches.push_back({"l" + std::to_string(i),
                               "r" + std::to_string(rights[i])});
    for (int i = 0; i < 20; ++i)
      clean.matches.push_back(
          {"fp" + std::to_string(i),
           "r" + std::to_string(rng.uniform_index(1000))});
    if (dupfree_test(clean).reject) ++clean_rejections;

    // Duplicate-heavy: every counted-side entity in ~3 matches.
    DupFreeInput heavy;
    heavy.direction = DupFreeDirection::kTestLeft;
    heavy.n_opposite = 1000;
    heavy.seed = seed;
    auto entities = rng.sample_without_replacement(1000, 67);
    for (int i = 0; i < 200; ++i)
      heavy.matches.push_back(
          {"l" + std::to_string(i),
           "r" + std::to_string(entities[i % entities.size()])});
    if (dupfree_test(heavy).reject) ++heavy_rejections;
  }
  std::printf("  clean rejected %d/%d, duplicate-heavy rejected %d/%d\n",
              clean_rejections, seeds, heavy_rejections, seeds);
  EXPECT_LE(clean_rejections, seeds / 10);       // <= 10%
  EXPECT_GE(heavy_rejections, seeds * 9 / 10);   // >= 90%
}

TEST(Acceptance, C08_DistinctValuePmfExactness) {
  Criterion c(8, "distinct-value pmf normalizes and matches enumeration");
  for (long m = 1; m <= 8; ++m)
    for (long n = 1; n <= 8; ++n) {
      double total = 0.0;
      for (long d = 1; d <= std::min(m, n); ++d)
        total += p_dr_given_x0(m, n, d);
      ASSERT_NEAR(total, 1.0, 1e-9) << "m=" << m << " n=" << n;
    }
  // |M| = N = 2 by full enumeration.
  EXPECT_NEAR(p_dr_given_x0(2, 2, 1), 0.5, 1e-12);
  EXPECT_NEAR(p_dr_given_x0(2, 2, 2), 0.5, 1e-12);
  // |M| = N = 3: enumerate all 27 equally likely draws.
  int histogram[4] = {0, 0, 0, 0};
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      for (int d = 1; d <= 3; ++d) {
        int distinct = 1 + (b != a) + (d != a && d != b);
        ++histogram[distinct];
      }
  for (long d = 1; d <= 3; ++d)
    EXPECT_NEAR(p_dr_given_x0(3, 3, d), histogram[d] / 27.0, 1e-12)
        << "d=" << d;
}

TEST(Acceptance, C09_LfDependencyPowerAndSize) {
  Criterion c(9, "dependent pairs caught, independent pairs spared");
  auto positive_lf = [](const std::vector<int>& y, double q_pos,
                        double q_neg, Rng& rng) {
    std::vector<std::int8_t> votes(y.size(), 0);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (rng.u01() < (y[i] > 0 ? q_pos : q_neg)) votes[i] = 1;
    return votes;
  };
  auto as_split = [](std::vector<std::int8_t> votes) {
    SplitLf lf;
    lf.polarity = Polarity::kPositive;
    lf.votes = std::move(votes);
    for (auto v : lf.votes) lf.vote_count += v != 0 ? 1 : 0;
    return lf;
  };

  // Power: a copied voter with 5% independent flips.
  int power_rejections = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(7000 + seed);
    std::vector<int> y(2000);
    for (auto& v : y) v = rng.u01() < 0.1 ? 1 : -1;
    auto votes1 = positive_lf(y, 0.5, 0.05, rng);
    auto votes2 = votes1;
    for (auto& v : votes2)
      if (rng.u01() < 0.05) v = v ? 0 : 1;
    DependencyCounts counts =
        counts_table(as_split(votes1), as_split(votes2), y);
    if (overlap_test(counts, estimate_hidden(counts), 0.05).reject)
      ++power_rejections;
  }
  std::printf("  dependent pairs rejected %d/10\n", power_rejections);
  EXPECT_GE(power_rejections, 9);

  // Size: conditionally independent voters at two accuracy settings drawn
  // from the same corpus regime as the power test (~5% false-positive
  // rates). The larger-vote split plays LF1, as in the production path.
  struct Setting {
    double qp1, qn1, qp2, qn2;
  };
  const Setting settings[2] = {{0.5, 0.05, 0.6, 0.05},
                               {0.65, 0.05, 0.75, 0.04}};
  for (const auto& s : settings) {
    int size_rejections = 0;
    for (int seed = 0; seed < 20; ++seed) {
      Rng rng(8000 + seed);
      std::vector<int> y(2000);
      for (auto& v : y) v = rng.u01() < 0.1 ? 1 : -1;
      auto a = as_split(positive_lf(y, s.qp1, s.qn1, rng));
      auto b = as_split(positive_lf(y, s.qp2, s.qn2, rng));
      const bool a_first = a.vote_count >= b.vote_count;
      DependencyCounts counts =
          counts_table(a_first ? a : b, a_first ? b : a, y);
      if (overlap_test(counts, estimate_hidden(counts), 0.05).reject)
        ++size_rejections;
    }
    std::printf("  independent pairs (q_pos=%.2f/%.2f) rejected %d/20\n",
                s.qp1, s.qp2, size_rejections);
    EXPECT_LE(size_rejections, 1);  // 1/20 = 5% <= 7%
  }

  // Dependency-graph iteration stabilizes within two rounds.
  Rng rng(31337);
  std::vector<int> y(600);
  for (auto& v : y) v = rng.u01() < 0.2 ? 1 : -1;
  std::vector<std::int8_t> votes(600 * 3, 0);
  for (std::size_t i = 0; i < 600; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (rng.u01() < 0.2) continue;
      votes[i * 3 + j] =
          static_cast<std::int8_t>(rng.u01() < 0.8 ? y[i] : -y[i]);
    }
    votes[i * 3 + 2] = votes[i * 3];  // duplicated column
  }
  std::vector<PairId> pairs;
  for (std::size_t i = 0; i < 600; ++i)
    pairs.push_back(PairId::two_table("L" + std::to_string(i),
                                      "R" + std::to_string(i)));
  LabelingMatrix x(TaskKind::kTwoTable, pairs, {"a", "b", "a_copy"}, votes);
  ProbAssignment gamma;
  for (std::size_t i = 0; i < 600; ++i)
    gamma.set(pairs[i], y[i] > 0 ? 1.0 : 0.0);
  DependencyGraph graph = infer_dependency_graph(x, gamma, 0.05, 5);
  EXPECT_LE(graph.rounds_used, 2);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VERDICT_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TEST(Acceptance, C10_CliByteDeterminism) {
  Criterion c(10, "every subcommand byte-identical across reruns");
  const fs::path tmp =
      fs::temp_directory_path() /
      ("verdict_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  auto f = [&](const std::string& name) { return (tmp / name).string(); };

  auto expect_identical_runs = [&](const std::string& args_template,
                                   const std::string& out_a,
                                   const std::string& out_b,
                                   const std::string& what) {
    std::string args_a = args_template, args_b = args_template;
    const std::string placeholder = "{OUT}";
    args_a.replace(args_a.find(placeholder), placeholder.size(), out_a);
    args_b.replace(args_b.find(placeholder), placeholder.size(), out_b);
    ASSERT_EQ(run_cli(args_a + " 2>/dev/null"), 0) << what;
    ASSERT_EQ(run_cli(args_b + " 2>/dev/null"), 0) << what;
    const std::string a = slurp(out_a), b = slurp(out_b);
    ASSERT_FALSE(a.empty()) << what;
    EXPECT_EQ(a, b) << what << " not deterministic";
  };

  // synth
  expect_identical_runs("synth --output {OUT} --truth-output " + f("gt.csv") +
                            " --n 240 --seed 11 --entities 80"
                            " --cluster-sizes 1 --lf-acc 0.9 0.85 0.8"
                            " --abstain 0.2",
                        f("x1.csv"), f("x2.csv"), "synth");
  // infer simple
  expect_identical_runs("infer --input " + f("x1.csv") +
                            " --output {OUT} --mode simple --seed 2",
                        f("p1.csv"), f("p2.csv"), "infer");
  // infer with auto transitivity (writes the sidecar as well)
  expect_identical_runs("infer --input " + f("x1.csv") +
                            " --output {OUT} --mode simple-em"
                            " --transitivity auto --seed 2"
                            " --n-left 80 --n-right 80",
                        f("q1.csv"), f("q2.csv"), "infer-auto");
  EXPECT_EQ(slurp(f("q1.csv.dupfree.csv")), slurp(f("q2.csv.dupfree.csv")));
  // dawid-skene and majority vote
  expect_identical_runs("infer --input " + f("x1.csv") +
                            " --output {OUT} --mode ds --seed 2",
                        f("d1.csv"), f("d2.csv"), "infer-ds");
  expect_identical_runs("infer --input " + f("x1.csv") +
                            " --output {OUT} --mode mv --seed 2",
                        f("m1.csv"), f("m2.csv"), "infer-mv");
  // trans-data + trans-train
  expect_identical_runs("trans-data --count 5 --seed 3 --steps 250"
                        " --output {OUT}",
                        f("td1.bin"), f("td2.bin"), "trans-data");
  expect_identical_runs("trans-train --data " + f("td1.bin") +
                            " --epochs 2 --cells-per-matrix 4 --seed 3"
                            " --output {OUT}",
                        f("tt1.bin"), f("tt2.bin"), "trans-train");
  // diagnostics
  expect_identical_runs("diag --what dupfree --matches " + f("p1.csv") +
                            " --direction left --n-opposite 80"
                            " --seed 4 --output {OUT}",
                        f("df1.csv"), f("df2.csv"), "diag-dupfree");
  expect_identical_runs("diag --what lfdeps --input " + f("x1.csv") +
                            " --gamma " + f("p1.csv") +
                            " --seed 4 --output {OUT}",
                        f("lf1.csv"), f("lf2.csv"), "diag-lfdeps");
  // eval prints to stdout; redirect to files
  ASSERT_EQ(run_cli("eval --pred " + f("p1.csv") + " --truth " + f("gt.csv") +
                    " > " + f("e1.txt") + " 2>/dev/null"),
            0);
  ASSERT_EQ(run_cli("eval --pred " + f("p1.csv") + " --truth " + f("gt.csv") +
                    " > " + f("e2.txt") + " 2>/dev/null"),
            0);
  EXPECT_EQ(slurp(f("e1.txt")), slurp(f("e2.txt")));
  fs::remove_all(tmp);
}

}  // namespace
