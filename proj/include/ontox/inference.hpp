#pragma once

// Sample classification: nearest leaf (naive zero-shot), k-NN majority vote,
// and top-down traversal of an ontology tree with optional outlier stop.
//
// All ties are broken by lexicographically smallest label so that a flat
// tree traversal and the nearest-leaf scan agree exactly.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ontox/error.hpp"
#include "ontox/ontology.hpp"
#include "ontox/vecstore.hpp"

namespace ontox {

struct InferenceConfig {
  Metric metric = Metric::cosine;
  std::optional<double> outlier_threshold;  // off by default
  std::size_t k = 1;
};

enum class ResultKind { classified, outlier };

inline std::string_view to_string(ResultKind k) {
  return k == ResultKind::classified ? "classified" : "outlier";
}

struct InferenceResult {
  ResultKind kind = ResultKind::classified;
  std::string label;               // leaf label, or the stalling node's label
  std::vector<std::string> path;   // labels of the chosen children, root excluded
  std::vector<double> distances;   // distance to each chosen child

  friend bool operator==(const InferenceResult&, const InferenceResult&) = default;
};

inline std::string naive_zero_shot(std::span<const double> sample, std::span<const LabeledVector> leaves,
                                   Metric metric) {
  if (leaves.empty()) throw InputError("empty leaf set");
  const LabeledVector* best = nullptr;
  double best_d = 0.0;
  for (const auto& leaf : leaves) {
    const double d = distance(sample, leaf.vector, metric);
    if (best == nullptr || d < best_d || (d == best_d && leaf.label < best->label)) {
      best = &leaf;
      best_d = d;
    }
  }
  return best->label;
}

// Records sharing a label are mean-pooled before the scan.
inline std::string naive_zero_shot(std::span<const double> sample, const EmbeddingSet& leaves, Metric metric) {
  if (leaves.empty()) throw InputError("empty leaf set");
  const auto pooled = pool_by_label(leaves);
  return naive_zero_shot(sample, pooled, metric);
}

// Majority label among the k nearest references. Neighbors are ranked by
// (distance, label, position); vote ties go to the smaller summed distance,
// then to the smaller label.
inline std::string knn_infer(std::span<const double> sample, std::span<const LabeledVector> refs,
                             Metric metric, std::size_t k) {
  if (refs.empty()) throw InputError("empty reference set");
  if (k == 0 || k > refs.size()) {
    throw InputError("k must be in [1, " + std::to_string(refs.size()) + "], got " + std::to_string(k));
  }
  struct Neighbor {
    double d;
    const std::string* label;
    std::size_t pos;
  };
  std::vector<Neighbor> all;
  all.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    all.push_back({distance(sample, refs[i].vector, metric), &refs[i].label, i});
  }
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    if (a.d != b.d) return a.d < b.d;
    if (*a.label != *b.label) return *a.label < *b.label;
    return a.pos < b.pos;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);

  struct Tally {
    std::size_t votes = 0;
    double sum = 0.0;
  };
  std::map<std::string, Tally> tally;
  for (std::size_t i = 0; i < k; ++i) {
    auto& t = tally[*all[i].label];
    ++t.votes;
    t.sum += all[i].d;
  }
  const std::string* best = nullptr;
  Tally best_t;
  for (const auto& [label, t] : tally) {  // map order gives the label tie-break
    if (best == nullptr || t.votes > best_t.votes || (t.votes == best_t.votes && t.sum < best_t.sum)) {
      best = &label;
      best_t = t;
    }
  }
  return *best;
}

inline std::string knn_infer(std::span<const double> sample, const EmbeddingSet& refs, Metric metric,
                             std::size_t k) {
  if (refs.empty()) throw InputError("empty reference set");
  std::vector<LabeledVector> lv;
  lv.reserve(refs.size());
  for (const auto& r : refs) lv.push_back({r.label, r.vector});
  return knn_infer(sample, lv, metric, k);
}

// Walk from the root, at each node moving to the child whose center is
// closest. With an outlier threshold set, stop at the current node when every
// child is farther than the threshold.
inline InferenceResult tree_infer(std::span<const double> sample, const OntologyTree& tree,
                                  const InferenceConfig& cfg) {
  InferenceResult res;
  const OntologyNode* node = &tree.root;
  while (!node->is_leaf()) {
    const OntologyNode* best = nullptr;
    double best_d = 0.0;
    for (const auto& child : node->children) {
      if (!child.center) throw InputError("node '" + child.id + "' has no center");
      const double d = distance(sample, *child.center, cfg.metric);
      if (best == nullptr || d < best_d || (d == best_d && child.label < best->label)) {
        best = &child;
        best_d = d;
      }
    }
    if (cfg.outlier_threshold && best_d > *cfg.outlier_threshold) {
      res.kind = ResultKind::outlier;
      res.label = node->label;
      return res;
    }
    res.path.push_back(best->label);
    res.distances.push_back(best_d);
    node = best;
  }
  res.kind = ResultKind::classified;
  res.label = node->label;
  return res;
}

// Leaves of a tree as (label, center) pairs in depth-first order.
inline std::vector<LabeledVector> leaf_table(const OntologyTree& tree) {
  std::vector<LabeledVector> out;
  for (const auto* leaf : leaves_of(tree.root)) {
    if (!leaf->center) throw InputError("leaf '" + leaf->label + "' has no center");
    out.push_back({leaf->label, *leaf->center});
  }
  return out;
}

}  // namespace ontox
