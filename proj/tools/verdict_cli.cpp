// Command-line front end: truth inference over labeling matrices, learned
// transitivity data/training, diagnostics, evaluation, and synthetic
// fixture generation.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "verdict/verdict.hpp"

namespace {

using namespace verdict;

TaskKind parse_task(const std::string& s) {
  if (s == "two-table") return TaskKind::kTwoTable;
  if (s == "single-table") return TaskKind::kSingleTable;
  throw Error(ErrorKind::kDomain, "unknown task kind: " + s);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::kIo, "cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::kIo, "cannot open output file: " + path);
  return out;
}

struct InferArgs {
  std::string input, output, task = "two-table", mode = "simple";
  std::string transitivity = "none", model_path;
  std::uint64_t seed = 0;
  int threads = 1;
  int max_iterations = 10;
  double flip_fraction = 0.001;
  double dupfree_c = 0.05;
  int sim_repeats = 1000;
  long n_left = 0, n_right = 0;
  int ds_max_iterations = 100;
  double ds_tol = 1e-6;
};

void write_dupfree_sidecar(const std::string& path, const EmResult& result,
                           std::uint64_t seed) {
  auto row = [](const char* direction, const DupFreeReport& r) {
    std::vector<std::string> out{direction,
                                 std::to_string(r.d_r_observed),
                                 std::to_string(r.x_hat),
                                 format_prob(r.bound_value),
                                 r.used_simulation ? "true" : "false",
                                 r.p_value_empirical
                                     ? format_prob(*r.p_value_empirical)
                                     : "",
                                 r.reject ? "true" : "false"};
    return out;
  };
  std::ofstream out = open_output(path);
  out << "# seed=" << seed << '\n';
  csv::write_row(out, {"tested_table", "distinct_observed", "x_hat",
                       "bound", "used_simulation", "p_value_empirical",
                       "dupfree_rejected"});
  if (result.dupfree_left) csv::write_row(out, row("left", *result.dupfree_left));
  if (result.dupfree_right)
    csv::write_row(out, row("right", *result.dupfree_right));
}

int cmd_infer(const InferArgs& args) {
  std::ifstream in = open_input(args.input);
  const TaskKind task = parse_task(args.task);
  LabelingMatrix x = load_labeling_matrix(in, task);

  EmConfig cfg;
  cfg.max_iterations = args.max_iterations;
  cfg.convergence_flip_fraction = args.flip_fraction;
  cfg.seed = args.seed;
  cfg.threads = args.threads;
  cfg.dupfree_c = args.dupfree_c;
  cfg.dupfree_sim_repeats = args.sim_repeats;
  cfg.n_left_tuples = args.n_left;
  cfg.n_right_tuples = args.n_right;

  ProbAssignment probs;
  EmResult result;
  if (args.mode == "mv") {
    probs = majority_vote(x);
  } else if (args.mode == "ds") {
    DawidSkeneResult ds = dawid_skene(x, args.ds_max_iterations, args.ds_tol);
    probs = std::move(ds.probs);
    std::cerr << "dawid-skene converged after " << ds.iterations
              << " iterations\n";
  } else if (args.mode == "simple" || args.mode == "simple-em") {
    std::optional<TransitivityNet> net;
    if (!args.model_path.empty()) {
      std::ifstream model_in = open_input(args.model_path);
      net = load_net(model_in);
    }
    if (args.mode == "simple") {
      cfg.transitivity_mode = TransitivityMode::kNone;
      result = simple_infer(x, cfg);
    } else {
      if (args.transitivity == "none")
        cfg.transitivity_mode = TransitivityMode::kNone;
      else if (args.transitivity == "exact-left")
        cfg.transitivity_mode = TransitivityMode::kExactOneSideLeft;
      else if (args.transitivity == "exact-right")
        cfg.transitivity_mode = TransitivityMode::kExactOneSideRight;
      else if (args.transitivity == "exact-two")
        cfg.transitivity_mode = TransitivityMode::kExactTwoSide;
      else if (args.transitivity == "learned")
        cfg.transitivity_mode = TransitivityMode::kLearnedSingleTable;
      else if (args.transitivity == "auto")
        cfg.transitivity_mode = TransitivityMode::kAuto;
      else
        throw Error(ErrorKind::kDomain,
                    "unknown transitivity mode: " + args.transitivity);
      result = simple_em_infer(x, cfg, std::nullopt,
                               net ? &*net : nullptr);
    }
    for (const auto& stat : result.iterations)
      std::cerr << "iteration " << stat.iteration
                << " flip_fraction=" << stat.flip_fraction
                << " depth=" << stat.chosen_depth
                << " ccp_alpha=" << stat.chosen_ccp_alpha << '\n';
    probs = std::move(result.probs);
  } else {
    throw Error(ErrorKind::kDomain, "unknown mode: " + args.mode);
  }

  std::ofstream out = open_output(args.output);
  save_probabilities(out, probs, "seed=" + std::to_string(args.seed));
  if (result.dupfree_left || result.dupfree_right)
    write_dupfree_sidecar(args.output + ".dupfree.csv", result, args.seed);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"weak-supervision truth inference for entity matching"};
  app.require_subcommand(1);
  app.set_config("--config");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // ---- infer ----
  InferArgs infer;
  CLI::App* infer_cmd =
      app.add_subcommand("infer", "consolidate LF votes into probabilities");
  infer_cmd->add_option("--input", infer.input, "labeling matrix CSV")
      ->required();
  infer_cmd->add_option("--output", infer.output, "probability CSV")
      ->required();
  infer_cmd->add_option("--task", infer.task, "two-table | single-table");
  infer_cmd->add_option("--mode", infer.mode, "mv | ds | simple | simple-em");
  infer_cmd->add_option("--transitivity", infer.transitivity,
                        "none | exact-left | exact-right | exact-two | "
                        "learned | auto");
  infer_cmd->add_option("--model", infer.model_path,
                        "transitivity model file (learned/auto single-table)");
  infer_cmd->add_option("--seed", infer.seed, "RNG seed");
  infer_cmd->add_option("--threads", infer.threads, "worker thread cap");
  infer_cmd->add_option("--max-iterations", infer.max_iterations,
                        "EM iteration cap");
  infer_cmd->add_option("--flip-fraction", infer.flip_fraction,
                        "convergence threshold on hard-label flips");
  infer_cmd->add_option("--dupfree-c", infer.dupfree_c,
                        "significance level for auto detection");
  infer_cmd->add_option("--sim-repeats", infer.sim_repeats,
                        "simulation repeats for auto detection");
  infer_cmd->add_option("--n-left", infer.n_left,
                        "left table size (auto detection)");
  infer_cmd->add_option("--n-right", infer.n_right,
                        "right table size (auto detection)");
  infer_cmd->add_option("--ds-max-iterations", infer.ds_max_iterations,
                        "dawid-skene iteration cap");
  infer_cmd->add_option("--ds-tol", infer.ds_tol,
                        "dawid-skene convergence tolerance");

  // ---- trans-data ----
  struct {
    std::string output;
    int count = 100;
    std::uint64_t seed = 0;
    int steps = 2000;
    double alpha = 100.0;
    double lr = 0.01;
    int threads = 1;
  } td;
  CLI::App* td_cmd = app.add_subcommand(
      "trans-data", "generate constrained-probability training pairs");
  td_cmd->add_option("--output", td.output, "dataset file")->required();
  td_cmd->add_option("--count", td.count, "number of matrix pairs")
      ->check(CLI::PositiveNumber);
  td_cmd->add_option("--seed", td.seed, "RNG seed");
  td_cmd->add_option("--steps", td.steps, "optimizer steps per matrix");
  td_cmd->add_option("--alpha", td.alpha, "transitivity penalty weight");
  td_cmd->add_option("--lr", td.lr, "optimizer learning rate");
  td_cmd->add_option("--threads", td.threads, "worker thread cap");

  // ---- trans-train ----
  struct {
    std::string data, output;
    int epochs = 40;
    double lr = 0.02;
    int cells = 16;
    std::uint64_t seed = 0;
    int threads = 1;
  } tt;
  CLI::App* tt_cmd =
      app.add_subcommand("trans-train", "train the transitivity model");
  tt_cmd->add_option("--data", tt.data, "dataset file")->required();
  tt_cmd->add_option("--output", tt.output, "model file")->required();
  tt_cmd->add_option("--epochs", tt.epochs, "training epochs");
  tt_cmd->add_option("--lr", tt.lr, "learning rate");
  tt_cmd->add_option("--cells-per-matrix", tt.cells,
                     "sampled cells per training matrix");
  tt_cmd->add_option("--seed", tt.seed, "RNG seed");
  tt_cmd->add_option("--threads", tt.threads, "worker thread cap");

  // ---- diag ----
  struct {
    std::string what, input, matches, gamma, output;
    std::string task = "two-table", direction = "left";
    long n_opposite = 0;
    double c = 0.05;
    int sim_repeats = 1000;
    std::uint64_t seed = 0;
    int threads = 1;
    int max_rounds = 3;
  } diag;
  CLI::App* diag_cmd =
      app.add_subcommand("diag", "duplicate-free and LF-dependency reports");
  diag_cmd->add_option("--what", diag.what, "dupfree | lfdeps")->required();
  diag_cmd->add_option("--input", diag.input, "labeling matrix CSV (lfdeps)");
  diag_cmd->add_option("--matches", diag.matches,
                       "match list CSV (dupfree); label column optional");
  diag_cmd->add_option("--gamma", diag.gamma,
                       "probability CSV for lfdeps (default: run simple)");
  diag_cmd->add_option("--output", diag.output, "report CSV")->required();
  diag_cmd->add_option("--task", diag.task, "two-table | single-table");
  diag_cmd->add_option("--direction", diag.direction,
                       "tested table for dupfree: left | right");
  diag_cmd->add_option("--n-opposite", diag.n_opposite,
                       "counted-side table size (dupfree)");
  diag_cmd->add_option("--c", diag.c, "significance level");
  diag_cmd->add_option("--sim-repeats", diag.sim_repeats,
                       "simulation repeats (dupfree)");
  diag_cmd->add_option("--seed", diag.seed, "RNG seed");
  diag_cmd->add_option("--threads", diag.threads, "worker thread cap");
  diag_cmd->add_option("--max-rounds", diag.max_rounds,
                       "dependency-graph iteration cap");

  // ---- eval ----
  struct {
    std::string pred, truth;
    std::string task = "two-table";
    bool partial = false;
  } ev;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", ev.pred, "probability CSV")->required();
  eval_cmd->add_option("--truth", ev.truth, "ground truth CSV")->required();
  eval_cmd->add_option("--task", ev.task, "two-table | single-table");
  eval_cmd->add_flag("--partial", ev.partial,
                     "score only pairs present in the ground truth");

  // ---- synth ----
  struct {
    std::string output, truth_output;
    std::string task = "two-table";
    int n = 1000;
    double pos_rate = 0.1;
    std::vector<double> accuracies{0.9, 0.85, 0.8, 0.7, 0.6};
    double abstain = 0.3;
    int duplicate_of = -1;
    double duplicate_flip = 0.0;
    std::uint64_t seed = 0;
    int entities = 0;
    std::vector<int> cluster_sizes;
  } sy;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic labeled fixture");
  synth_cmd->add_option("--output", sy.output, "labeling matrix CSV")
      ->required();
  synth_cmd->add_option("--truth-output", sy.truth_output,
                        "ground truth CSV")
      ->required();
  synth_cmd->add_option("--task", sy.task, "two-table | single-table");
  synth_cmd->add_option("--n", sy.n, "number of candidate pairs");
  synth_cmd->add_option("--pos-rate", sy.pos_rate, "positive rate");
  synth_cmd->add_option("--lf-acc", sy.accuracies,
                        "per-LF conditional accuracies");
  synth_cmd->add_option("--abstain", sy.abstain, "per-LF abstain rate");
  synth_cmd->add_option("--duplicate-lf", sy.duplicate_of,
                        "append a copy of this LF index");
  synth_cmd->add_option("--duplicate-flip", sy.duplicate_flip,
                        "sign-flip rate on the copied LF");
  synth_cmd->add_option("--seed", sy.seed, "RNG seed");
  synth_cmd->add_option("--entities", sy.entities,
                        "entity count (two-table clustered fixture)");
  synth_cmd->add_option("--cluster-sizes", sy.cluster_sizes,
                        "right-side duplicate cluster sizes (uniform mix)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors map to exit 2
  }

  if (infer_cmd->parsed()) return cmd_infer(infer);

  if (td_cmd->parsed()) {
    TrainGenConfig cfg;
    cfg.matrix_count = td.count;
    cfg.seed = td.seed;
    cfg.steps = td.steps;
    cfg.alpha = td.alpha;
    cfg.lr = td.lr;
    auto pairs = gen_training_set(cfg, td.threads);
    std::ofstream out = open_output(td.output);
    save_training_set(out, pairs);
    std::cerr << "wrote " << pairs.size() << " training pairs\n";
    return 0;
  }

  if (tt_cmd->parsed()) {
    std::ifstream in = open_input(tt.data);
    auto dataset = load_training_set(in);
    if (dataset.empty())
      throw Error(ErrorKind::kEmptyInput, "training dataset is empty");
    TrainConfig cfg;
    cfg.epochs = tt.epochs;
    cfg.lr = tt.lr;
    cfg.cells_per_matrix = tt.cells;
    cfg.seed = tt.seed;
    TransitivityNet net = train_net(dataset, NetDims{}, cfg, tt.threads);
    std::ofstream out = open_output(tt.output);
    save_net(out, net);
    std::cerr << "trained on " << dataset.size() << " matrix pairs\n";
    return 0;
  }

  if (diag_cmd->parsed()) {
    if (diag.what == "dupfree") {
      if (diag.matches.empty())
        throw Error(ErrorKind::kDomain, "--matches is required for dupfree");
      std::ifstream in = open_input(diag.matches);
      auto rows = csv::read(in);
      if (rows.size() < 2)
        throw Error(ErrorKind::kEmptyInput, "no matches in file");
      int label_col = -1;
      for (std::size_t c = 0; c < rows[0].size(); ++c)
        if (rows[0][c] == "label") label_col = static_cast<int>(c);
      DupFreeInput input;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 2)
          throw Error(ErrorKind::kMalformedCsv, "match rows need two ids");
        if (label_col >= 0 && rows[r][label_col] != "1") continue;
        input.matches.push_back({rows[r][0], rows[r][1]});
      }
      if (input.matches.empty())
        throw Error(ErrorKind::kEmptyInput, "no positive matches in file");
      input.direction = diag.direction == "right"
                            ? DupFreeDirection::kTestRight
                            : DupFreeDirection::kTestLeft;
      if (diag.n_opposite <= 0)
        throw Error(ErrorKind::kDomain, "--n-opposite must be positive");
      input.n_opposite = diag.n_opposite;
      input.c = diag.c;
      input.sim_repeats = diag.sim_repeats;
      input.seed = diag.seed;
      input.threads = diag.threads;
      DupFreeReport r = dupfree_test(input);
      std::ofstream out = open_output(diag.output);
      out << "# seed=" << diag.seed << '\n';
      csv::write_row(out, {"tested_table", "distinct_observed", "x_hat",
                           "bound", "used_simulation", "p_value_empirical",
                           "dupfree_rejected"});
      csv::write_row(out, {diag.direction, std::to_string(r.d_r_observed),
                           std::to_string(r.x_hat),
                           format_prob(r.bound_value),
                           r.used_simulation ? "true" : "false",
                           r.p_value_empirical
                               ? format_prob(*r.p_value_empirical)
                               : "",
                           r.reject ? "true" : "false"});
      return 0;
    }
    if (diag.what == "lfdeps") {
      if (diag.input.empty())
        throw Error(ErrorKind::kDomain, "--input is required for lfdeps");
      std::ifstream in = open_input(diag.input);
      const TaskKind task = parse_task(diag.task);
      LabelingMatrix x = load_labeling_matrix(in, task);
      ProbAssignment gamma;
      if (!diag.gamma.empty()) {
        std::ifstream gin = open_input(diag.gamma);
        gamma = load_probabilities(gin, task);
      } else {
        EmConfig cfg;
        cfg.seed = diag.seed;
        cfg.threads = diag.threads;
        gamma = simple_infer(x, cfg).probs;
      }
      DependencyGraph g = infer_dependency_graph(x, gamma, diag.c,
                                                 diag.max_rounds,
                                                 diag.threads);
      std::ofstream out = open_output(diag.output);
      save_dependency_report(out, g, "seed=" + std::to_string(diag.seed));
      std::cerr << "tested " << g.tests.size() << " split pairs over "
                << g.rounds_used << " rounds\n";
      return 0;
    }
    throw Error(ErrorKind::kDomain, "unknown diagnostic: " + diag.what);
  }

  if (eval_cmd->parsed()) {
    const TaskKind task = parse_task(ev.task);
    std::ifstream pin = open_input(ev.pred);
    ProbAssignment pred = load_probabilities(pin, task);
    std::ifstream gin = open_input(ev.truth);
    GroundTruth gt = load_ground_truth(gin, task);
    gt.partial = ev.partial;
    MatchMetrics m = f1_score(pred, gt);
    std::cout << "precision=" << format_prob(m.precision)
              << " recall=" << format_prob(m.recall)
              << " f1=" << format_prob(m.f1) << '\n';
    return 0;
  }

  if (synth_cmd->parsed()) {
    SynthSpec spec;
    spec.task = parse_task(sy.task);
    spec.n_pairs = sy.n;
    spec.positive_rate = sy.pos_rate;
    spec.seed = sy.seed;
    for (double a : sy.accuracies) {
      SynthLf lf;
      lf.accuracy = a;
      lf.abstain_rate = sy.abstain;
      spec.lfs.push_back(lf);
    }
    if (sy.duplicate_of >= 0) {
      SynthLf lf;
      lf.duplicate_of = sy.duplicate_of;
      lf.duplicate_flip_rate = sy.duplicate_flip;
      spec.lfs.push_back(lf);
    }
    if (sy.entities > 0) {
      spec.entities = sy.entities;
      spec.cluster_sizes.clear();
      if (sy.cluster_sizes.empty()) sy.cluster_sizes = {1};
      for (int s : sy.cluster_sizes) spec.cluster_sizes.push_back({s, 1.0});
    }
    SynthResult result = gen_synth(spec);
    std::ofstream out = open_output(sy.output);
    out << "# seed=" << sy.seed << '\n';
    save_labeling_matrix(out, result.matrix);
    std::ofstream truth_out = open_output(sy.truth_output);
    truth_out << "# seed=" << sy.seed << '\n';
    csv::write_row(truth_out,
                   {spec.task == TaskKind::kTwoTable ? "left_id" : "id_a",
                    spec.task == TaskKind::kTwoTable ? "right_id" : "id_b",
                    "label"});
    for (const PairId& p : result.matrix.pairs())
      csv::write_row(truth_out, {p.a.id, p.b.id,
                                 std::to_string(result.truth.labels.at(p))});
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const verdict::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == verdict::ErrorKind::kNumeric ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
