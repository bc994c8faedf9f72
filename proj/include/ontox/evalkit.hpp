#pragma once

// Evaluation quantities: accuracy against ground truth, fidelity of tree
// inference relative to the nearest-leaf baseline, prediction agreement and
// contextualized-leaf verification.

#include <cstddef>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ontox/csv.hpp"
#include "ontox/error.hpp"
#include "ontox/inference.hpp"
#include "ontox/vecstore.hpp"

namespace ontox {

struct Prediction {
  std::string sample_id;
  std::string predicted;
  ResultKind kind = ResultKind::classified;
  std::string truth;
};

using LabeledPredictions = std::vector<Prediction>;

inline void check_unique_ids(const LabeledPredictions& preds) {
  std::unordered_set<std::string> seen;
  for (const auto& p : preds) {
    if (!seen.insert(p.sample_id).second) throw InputError("duplicate sample id '" + p.sample_id + "'");
  }
}

inline bool is_correct(const Prediction& p) {
  return p.kind == ResultKind::classified && p.predicted == p.truth;
}

// Outlier predictions never count as correct.
inline double accuracy(const LabeledPredictions& preds) {
  if (preds.empty()) throw InputError("accuracy of empty prediction list");
  std::size_t hits = 0;
  for (const auto& p : preds) hits += is_correct(p) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

inline double fidelity(double accuracy_tree, double accuracy_naive) {
  if (!(accuracy_naive > 0.0)) throw InputError("fidelity undefined for zero naive accuracy");
  return accuracy_tree / accuracy_naive;
}

// Fraction of samples on which both lists give the same outcome (same kind
// and same label). Both lists must cover the same sample ids.
inline double agreement(const LabeledPredictions& a, const LabeledPredictions& b) {
  if (a.empty()) throw InputError("agreement of empty prediction list");
  if (a.size() != b.size()) throw InputError("prediction lists cover different samples");
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : b) by_id.emplace(p.sample_id, &p);
  std::size_t same = 0;
  for (const auto& p : a) {
    auto it = by_id.find(p.sample_id);
    if (it == by_id.end()) throw InputError("sample id '" + p.sample_id + "' missing from second list");
    same += (p.kind == it->second->kind && p.predicted == it->second->predicted) ? 1 : 0;
  }
  return static_cast<double>(same) / static_cast<double>(a.size());
}

inline std::string confusion_key(const Prediction& p) {
  return p.kind == ResultKind::outlier ? "outlier(" + p.predicted + ")" : p.predicted;
}

using Confusion = std::map<std::pair<std::string, std::string>, std::size_t>;  // (truth, predicted)

inline Confusion confusion(const LabeledPredictions& preds) {
  Confusion c;
  for (const auto& p : preds) ++c[{p.truth, confusion_key(p)}];
  return c;
}

struct EvalReport {
  std::size_t n = 0;
  std::optional<double> accuracy_naive;
  std::optional<double> accuracy_tree;
  std::optional<double> fidelity_ratio;
  std::optional<double> agreement;
  Confusion confusion;
};

// `naive` is the baseline prediction list; `tree`, when given, is compared
// against it. The confusion table describes the tree predictions if present.
inline EvalReport evaluate(const LabeledPredictions& naive, const LabeledPredictions* tree = nullptr) {
  check_unique_ids(naive);
  EvalReport r;
  r.n = naive.size();
  r.accuracy_naive = accuracy(naive);
  if (tree != nullptr) {
    check_unique_ids(*tree);
    r.accuracy_tree = accuracy(*tree);
    r.agreement = agreement(naive, *tree);
    if (*r.accuracy_naive > 0.0) r.fidelity_ratio = fidelity(*r.accuracy_tree, *r.accuracy_naive);
    r.confusion = confusion(*tree);
  } else {
    r.confusion = confusion(naive);
  }
  return r;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["accuracy_naive"] = opt(r.accuracy_naive);
  j["accuracy_tree"] = opt(r.accuracy_tree);
  j["fidelity_ratio"] = opt(r.fidelity_ratio);
  j["agreement"] = opt(r.agreement);
  j["confusion"] = nlohmann::ordered_json::array();
  for (const auto& [key, count] : r.confusion) {
    j["confusion"].push_back({{"truth", key.first}, {"predicted", key.second}, {"count", count}});
  }
  return j;
}

inline void print_report(std::ostream& out, const EvalReport& r) {
  auto show = [&](const char* name, const std::optional<double>& v) {
    out << std::left << std::setw(16) << name;
    if (v) {
      out << std::fixed << std::setprecision(4) << *v;
    } else {
      out << "-";
    }
    out << '\n';
  };
  out << std::left << std::setw(16) << "samples" << r.n << '\n';
  show("accuracy_naive", r.accuracy_naive);
  show("accuracy_tree", r.accuracy_tree);
  show("fidelity_ratio", r.fidelity_ratio);
  show("agreement", r.agreement);
  out.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Contextualized-leaf verification

struct LeafScore {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct ContextualReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::map<std::string, LeafScore> per_leaf;  // keyed by truth label
};

// Nearest-leaf classification of `samples` against the contextualized leaf
// embeddings, scored against `truth` (sample id -> leaf label).
inline ContextualReport verify_contextualized(const EmbeddingSet& samples, const EmbeddingSet& contextual_leaves,
                                              const std::map<std::string, std::string>& truth, Metric metric) {
  const auto leaves = pool_by_label(contextual_leaves);
  std::set<std::string> leaf_labels;
  for (const auto& l : leaves) leaf_labels.insert(l.label);
  for (const auto& [id, label] : truth) {
    if (!leaf_labels.contains(label)) {
      throw InputError("truth label '" + label + "' has no contextualized leaf embedding");
    }
  }

  ContextualReport rep;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    auto it = truth.find(s.id);
    if (it == truth.end()) throw InputError("no ground truth for sample '" + s.id + "'");
    const bool ok = naive_zero_shot(s.vector, leaves, metric) == it->second;
    auto& score = rep.per_leaf[it->second];
    ++score.total;
    if (ok) {
      ++score.correct;
      ++hits;
    }
  }
  rep.n = samples.size();
  rep.accuracy = static_cast<double>(hits) / static_cast<double>(rep.n);
  return rep;
}

inline nlohmann::ordered_json to_json(const ContextualReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["per_leaf"] = nlohmann::ordered_json::object();
  for (const auto& [label, s] : r.per_leaf) {
    j["per_leaf"][label] = {{"correct", s.correct}, {"total", s.total}, {"accuracy", s.accuracy()}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Files

// Ground truth CSV with header `sample_id,label`.
inline std::map<std::string, std::string> read_truth(std::istream& in) {
  auto t = csv::read(in);
  if (t.header != std::vector<std::string>{"sample_id", "label"}) {
    throw InputError("truth file must start with header 'sample_id,label'");
  }
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const auto line = std::to_string(t.line_numbers[i]);
    if (row.size() != 2) throw InputError("truth file: expected 2 columns at line " + line);
    if (!out.emplace(row[0], row[1]).second) {
      throw InputError("truth file: duplicate sample id '" + row[0] + "' at line " + line);
    }
  }
  return out;
}

inline std::map<std::string, std::string> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open truth file '" + path + "'");
  try {
    return read_truth(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct PredictionRow {
  std::string sample_id;
  std::string predicted;
  ResultKind kind = ResultKind::classified;
  std::string path;
};

inline const char* path_separator() { return " > "; }

inline void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows) {
  csv::write_row(out, {"sample_id", "predicted", "kind", "path"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.sample_id, r.predicted, std::string(to_string(r.kind)), r.path});
  }
}

inline std::vector<PredictionRow> read_predictions(std::istream& in) {
  auto t = csv::read(in);
  if (t.header != std::vector<std::string>{"sample_id", "predicted", "kind", "path"}) {
    throw InputError("prediction file must start with header 'sample_id,predicted,kind,path'");
  }
  std::vector<PredictionRow> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const auto line = std::to_string(t.line_numbers[i]);
    if (row.size() != 4) throw InputError("prediction file: expected 4 columns at line " + line);
    PredictionRow p{row[0], row[1], ResultKind::classified, row[3]};
    if (row[2] == "outlier") {
      p.kind = ResultKind::outlier;
    } else if (row[2] != "classified") {
      throw InputError("prediction file: unknown kind '" + row[2] + "' at line " + line);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PredictionRow> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open prediction file '" + path + "'");
  try {
    return read_predictions(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Attach ground truth; every prediction must have a truth entry and vice versa.
inline LabeledPredictions join_truth(const std::vector<PredictionRow>& rows,
                                     const std::map<std::string, std::string>& truth) {
  LabeledPredictions out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    auto it = truth.find(r.sample_id);
    if (it == truth.end()) throw InputError("sample id '" + r.sample_id + "' not in truth file");
    out.push_back({r.sample_id, r.predicted, r.kind, it->second});
  }
  check_unique_ids(out);
  if (out.size() != truth.size()) {
    throw InputError("prediction file covers " + std::to_string(out.size()) + " samples, truth file " +
                     std::to_string(truth.size()));
  }
  return out;
}

}  // namespace ontox
