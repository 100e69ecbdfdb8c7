#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "verdict/csv.hpp"
#include "verdict/error.hpp"

namespace verdict {

enum class TaskKind { kTwoTable, kSingleTable };
enum class TableSide : std::uint8_t { kLeft, kRight, kSingle };

struct TupleRef {
  TableSide side = TableSide::kSingle;
  std::string id;

  friend bool operator==(const TupleRef& a, const TupleRef& b) {
    return a.side == b.side && a.id == b.id;
  }
  friend bool operator<(const TupleRef& a, const TupleRef& b) {
    if (a.side != b.side) return a.side < b.side;
    return a.id < b.id;
  }
};

// A candidate tuple pair. Two-table pairs are (left, right); single-table
// pairs are stored with a.id < b.id so that (x,y) and (y,x) collide.
struct PairId {
  TupleRef a;
  TupleRef b;

  static PairId two_table(std::string left, std::string right) {
    return PairId{{TableSide::kLeft, std::move(left)},
                  {TableSide::kRight, std::move(right)}};
  }

  static PairId single_table(std::string x, std::string y) {
    if (x.empty() || y.empty())
      throw Error(ErrorKind::kDomain, "empty tuple id");
    if (x == y)
      throw Error(ErrorKind::kDomain, "self pair: " + x);
    if (y < x) std::swap(x, y);
    return PairId{{TableSide::kSingle, std::move(x)},
                  {TableSide::kSingle, std::move(y)}};
  }

  friend bool operator==(const PairId& p, const PairId& q) {
    return p.a == q.a && p.b == q.b;
  }
  friend bool operator<(const PairId& p, const PairId& q) {
    if (!(p.a == q.a)) return p.a < q.a;
    return p.b < q.b;
  }
};

struct PairIdHash {
  std::size_t operator()(const PairId& p) const {
    std::size_t h = std::hash<std::string>{}(p.a.id);
    h ^= std::hash<std::string>{}(p.b.id) + 0x9e3779b97f4a7c15ULL + (h << 6) +
         (h >> 2);
    h ^= static_cast<std::size_t>(p.a.side) * 1315423911u;
    return h;
  }
};

// n pairs x m labeling functions, votes in {-1, 0, +1}.
class LabelingMatrix {
 public:
  LabelingMatrix() = default;
  LabelingMatrix(TaskKind task, std::vector<PairId> pairs,
                 std::vector<std::string> lf_names,
                 std::vector<std::int8_t> votes)
      : task_(task),
        pairs_(std::move(pairs)),
        lf_names_(std::move(lf_names)),
        votes_(std::move(votes)) {
    validate();
  }

  TaskKind task() const { return task_; }
  std::size_t rows() const { return pairs_.size(); }
  std::size_t cols() const { return lf_names_.size(); }
  const std::vector<PairId>& pairs() const { return pairs_; }
  const std::vector<std::string>& lf_names() const { return lf_names_; }
  int vote(std::size_t row, std::size_t col) const {
    return votes_[row * lf_names_.size() + col];
  }
  const std::vector<std::int8_t>& votes() const { return votes_; }

  std::size_t row_of(const PairId& p) const { return index_.at(p); }

 private:
  void validate() {
    if (votes_.size() != pairs_.size() * lf_names_.size())
      throw Error(ErrorKind::kMalformedCsv, "vote grid size mismatch");
    index_.reserve(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      if (pairs_[i].a.id.empty() || pairs_[i].b.id.empty())
        throw Error(ErrorKind::kDomain, "empty tuple id");
      if (!index_.emplace(pairs_[i], i).second)
        throw Error(ErrorKind::kDuplicatePair,
                    "duplicate pair (" + pairs_[i].a.id + ", " +
                        pairs_[i].b.id + ")");
    }
    for (const auto v : votes_)
      if (v < -1 || v > 1)
        throw Error(ErrorKind::kDomain,
                    "vote outside {-1,0,1}: " + std::to_string(int(v)));
    for (std::size_t j = 0; j < lf_names_.size(); ++j) {
      bool any = false;
      for (std::size_t i = 0; i < pairs_.size() && !any; ++i)
        any = vote(i, j) != 0;
      if (!any)
        throw Error(ErrorKind::kDegenerateLf,
                    "labeling function '" + lf_names_[j] +
                        "' never votes");
    }
  }

  TaskKind task_ = TaskKind::kTwoTable;
  std::vector<PairId> pairs_;
  std::vector<std::string> lf_names_;
  std::vector<std::int8_t> votes_;
  std::unordered_map<PairId, std::size_t, PairIdHash> index_;
};

// Match probabilities keyed by pair, kept in insertion order so that file
// output is stable.
class ProbAssignment {
 public:
  ProbAssignment() = default;
  explicit ProbAssignment(const std::vector<PairId>& pairs,
                          const std::vector<double>& probs) {
    for (std::size_t i = 0; i < pairs.size(); ++i) set(pairs[i], probs[i]);
  }

  void set(const PairId& p, double value) {
    auto it = index_.find(p);
    if (it == index_.end()) {
      index_.emplace(p, pairs_.size());
      pairs_.push_back(p);
      probs_.push_back(value);
    } else {
      probs_[it->second] = value;
    }
  }

  double at(const PairId& p) const { return probs_[index_.at(p)]; }
  std::size_t index_of(const PairId& p) const { return index_.at(p); }
  bool contains(const PairId& p) const { return index_.count(p) != 0; }
  std::size_t size() const { return pairs_.size(); }
  const std::vector<PairId>& pairs() const { return pairs_; }
  const std::vector<double>& values() const { return probs_; }
  double value_at(std::size_t i) const { return probs_[i]; }
  void set_value_at(std::size_t i, double v) { probs_[i] = v; }

 private:
  std::vector<PairId> pairs_;
  std::vector<double> probs_;
  std::unordered_map<PairId, std::size_t, PairIdHash> index_;
};

struct GroundTruth {
  std::unordered_map<PairId, int, PairIdHash> labels;  // values in {-1,+1}
  bool partial = false;
};

struct MatchMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Hard-label rule used everywhere: +1 iff gamma > 0.5. Ties and all-abstain
// rows resolve to non-match, the conservative choice for candidate sets that
// are mostly non-matches.
inline int hard_label(double gamma) { return gamma > 0.5 ? 1 : -1; }

inline LabelingMatrix load_labeling_matrix(std::istream& in, TaskKind task) {
  auto rows = csv::read(in);
  if (rows.empty())
    throw Error(ErrorKind::kMalformedCsv, "empty labeling matrix file");
  const auto& header = rows.front();
  if (header.size() < 3)
    throw Error(ErrorKind::kSchema,
                "labeling matrix needs two id columns and at least one LF");
  const bool two_table = task == TaskKind::kTwoTable;
  const std::string want_a = two_table ? "left_id" : "id_a";
  const std::string want_b = two_table ? "right_id" : "id_b";
  if (header[0] != want_a || header[1] != want_b)
    throw Error(ErrorKind::kSchema,
                "expected header to start with '" + want_a + "," + want_b +
                    "', got '" + header[0] + "," + header[1] + "'");
  std::vector<std::string> lf_names(header.begin() + 2, header.end());
  std::vector<PairId> pairs;
  std::vector<std::int8_t> votes;
  pairs.reserve(rows.size() - 1);
  votes.reserve((rows.size() - 1) * lf_names.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw Error(ErrorKind::kMalformedCsv,
                  "row " + std::to_string(r + 1) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    pairs.push_back(two_table ? PairId::two_table(row[0], row[1])
                              : PairId::single_table(row[0], row[1]));
    for (std::size_t c = 2; c < row.size(); ++c) {
      if (row[c] != "-1" && row[c] != "0" && row[c] != "1")
        throw Error(ErrorKind::kDomain,
                    "row " + std::to_string(r + 1) + ": vote '" + row[c] +
                        "' outside {-1,0,1}");
      votes.push_back(static_cast<std::int8_t>(std::stoi(row[c])));
    }
  }
  return LabelingMatrix(task, std::move(pairs), std::move(lf_names),
                        std::move(votes));
}

inline void save_labeling_matrix(std::ostream& out, const LabelingMatrix& x) {
  std::vector<std::string> header;
  header.push_back(x.task() == TaskKind::kTwoTable ? "left_id" : "id_a");
  header.push_back(x.task() == TaskKind::kTwoTable ? "right_id" : "id_b");
  for (const auto& n : x.lf_names()) header.push_back(n);
  csv::write_row(out, header);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<std::string> row{x.pairs()[i].a.id, x.pairs()[i].b.id};
    for (std::size_t j = 0; j < x.cols(); ++j)
      row.push_back(std::to_string(x.vote(i, j)));
    csv::write_row(out, row);
  }
}

inline GroundTruth load_ground_truth(std::istream& in, TaskKind task) {
  auto rows = csv::read(in);
  if (rows.empty())
    throw Error(ErrorKind::kMalformedCsv, "empty ground truth file");
  const auto& header = rows.front();
  if (header.size() != 3 || header[2] != "label")
    throw Error(ErrorKind::kSchema,
                "expected header '<id>,<id>,label'");
  GroundTruth gt;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3)
      throw Error(ErrorKind::kMalformedCsv,
                  "row " + std::to_string(r + 1) + ": expected 3 fields");
    if (row[2] != "-1" && row[2] != "1")
      throw Error(ErrorKind::kDomain,
                  "row " + std::to_string(r + 1) + ": label '" + row[2] +
                      "' outside {-1,1}");
    PairId p = task == TaskKind::kTwoTable
                   ? PairId::two_table(row[0], row[1])
                   : PairId::single_table(row[0], row[1]);
    gt.labels[p] = std::stoi(row[2]);
  }
  return gt;
}

inline std::string format_prob(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void save_probabilities(std::ostream& out, const ProbAssignment& probs,
                               const std::string& seed_comment = "") {
  if (!seed_comment.empty()) out << "# " << seed_comment << '\n';
  csv::write_row(out, {"left_id", "right_id", "prob", "label"});
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const PairId& p = probs.pairs()[i];
    double v = probs.value_at(i);
    csv::write_row(out, {p.a.id, p.b.id, format_prob(v),
                         std::to_string(hard_label(v))});
  }
}

inline ProbAssignment load_probabilities(std::istream& in, TaskKind task) {
  auto rows = csv::read(in);
  if (rows.empty())
    throw Error(ErrorKind::kMalformedCsv, "empty probability file");
  const auto& header = rows.front();
  if (header.size() < 3)
    throw Error(ErrorKind::kSchema, "expected '<id>,<id>,prob[,label]'");
  ProbAssignment out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 3)
      throw Error(ErrorKind::kMalformedCsv,
                  "row " + std::to_string(r + 1) + ": expected >=3 fields");
    double v = std::stod(row[2]);
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorKind::kDomain,
                  "row " + std::to_string(r + 1) + ": probability out of range");
    PairId p = task == TaskKind::kTwoTable
                   ? PairId::two_table(row[0], row[1])
                   : PairId::single_table(row[0], row[1]);
    out.set(p, v);
  }
  return out;
}

// Per-row majority vote: fraction of +1 among non-abstain votes; rows with
// no votes at all default to non-match.
inline ProbAssignment majority_vote(const LabelingMatrix& x) {
  ProbAssignment out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    int pos = 0, neg = 0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      int v = x.vote(i, j);
      if (v > 0)
        ++pos;
      else if (v < 0)
        ++neg;
    }
    double gamma = (pos + neg) == 0 ? 0.0
                                    : static_cast<double>(pos) / (pos + neg);
    out.set(x.pairs()[i], gamma);
  }
  return out;
}

// Binary F1 with +1 as the positive class. With partial ground truth only
// the labeled pairs are scored.
inline MatchMetrics f1_score(const ProbAssignment& pred,
                             const GroundTruth& gt) {
  long tp = 0, fp = 0, fn = 0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto it = gt.labels.find(pred.pairs()[i]);
    if (it == gt.labels.end()) {
      if (gt.partial) continue;
      continue;  // unlabeled pairs are never scored
    }
    ++scored;
    int y = it->second;
    int y_hat = hard_label(pred.value_at(i));
    if (y_hat == 1 && y == 1) ++tp;
    if (y_hat == 1 && y == -1) ++fp;
    if (y_hat == -1 && y == 1) ++fn;
  }
  if (scored == 0)
    throw Error(ErrorKind::kEmptyInput,
                "no overlap between predictions and ground truth");
  MatchMetrics m;
  m.precision = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
  m.recall = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
  m.f1 = (m.precision + m.recall) == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace verdict
