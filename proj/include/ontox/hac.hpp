#pragma once

// Deterministic agglomerative hierarchical clustering.
//
// Node references follow the usual dendrogram numbering: refs 0..n-1 are the
// leaves (record indices of the source set), ref n+k is the k-th merge.
// Cluster linkage values are maintained with Lance-Williams updates over a
// dense matrix; the naive O(n^3) scan is fine for the leaf counts this is
// meant for (tens to a few hundred concepts).
//
// Ties on the linkage value (exact float equality) go to the pair whose
// smaller member-minimum leaf index is lowest, then whose larger one is.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ontox/error.hpp"
#include "ontox/vecstore.hpp"

namespace ontox {

enum class Linkage { ward, complete, average, single };

inline std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::ward: return "ward";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
    case Linkage::single: return "single";
  }
  return "?";
}

inline Linkage parse_linkage(std::string_view s) {
  if (s == "ward") return Linkage::ward;
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  if (s == "single") return Linkage::single;
  throw InputError("unknown linkage '" + std::string(s) + "'");
}

struct ClusterConfig {
  Metric affinity = Metric::euclidean;
  Linkage linkage = Linkage::complete;

  void validate() const {
    if (linkage == Linkage::ward && affinity != Metric::euclidean) {
      throw InputError("ward requires euclidean affinity");
    }
  }
};

using NodeRef = std::size_t;

struct Merge {
  NodeRef left = 0;
  NodeRef right = 0;
  double height = 0.0;
  std::vector<std::size_t> members;  // sorted leaf indices
};

struct MergeTree {
  std::size_t leaf_count = 0;
  std::vector<Merge> merges;  // merges[k] is node leaf_count + k

  std::size_t node_count() const { return leaf_count + merges.size(); }
  NodeRef root() const { return node_count() - 1; }
  bool is_leaf(NodeRef r) const { return r < leaf_count; }
  const Merge& merge_at(NodeRef r) const { return merges.at(r - leaf_count); }

  std::vector<std::size_t> members(NodeRef r) const {
    if (is_leaf(r)) return {r};
    return merge_at(r).members;
  }

  std::size_t size_of(NodeRef r) const { return is_leaf(r) ? 1 : merge_at(r).members.size(); }

  double height(NodeRef r) const { return is_leaf(r) ? 0.0 : merge_at(r).height; }
};

namespace detail {

// Pairwise leaf dissimilarities in the form the Lance-Williams recurrences
// expect. For ward this is half the squared euclidean distance, so that every
// value is the increase in within-cluster sum of squares of the merge.
inline std::vector<double> initial_dissimilarities(const EmbeddingSet& set, const ClusterConfig& cfg) {
  const std::size_t n = set.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.0;
      if (cfg.linkage == Linkage::ward) {
        const double e = distance(set[i].vector, set[j].vector, Metric::euclidean);
        v = 0.5 * e * e;
      } else {
        v = distance(set[i].vector, set[j].vector, cfg.affinity);
      }
      d[i * n + j] = d[j * n + i] = v;
    }
  }
  return d;
}

inline double lance_williams(Linkage l, double dki, double dkj, double dij, double ni, double nj,
                             double nk) {
  switch (l) {
    case Linkage::single: return std::min(dki, dkj);
    case Linkage::complete: return std::max(dki, dkj);
    case Linkage::average: return (ni * dki + nj * dkj) / (ni + nj);
    case Linkage::ward: return ((ni + nk) * dki + (nj + nk) * dkj - nk * dij) / (ni + nj + nk);
  }
  return 0.0;
}

}  // namespace detail

inline MergeTree agglomerate(const EmbeddingSet& set, const ClusterConfig& cfg) {
  cfg.validate();
  const std::size_t n = set.size();
  if (n < 2) throw InputError("clustering needs at least 2 leaves, got " + std::to_string(n));

  std::vector<double> d = detail::initial_dissimilarities(set, cfg);

  // Slot i initially holds leaf i; after merging slots a < b (by min leaf),
  // the merged cluster lives in slot a and slot b is retired.
  struct Slot {
    NodeRef ref;
    std::size_t min_leaf;
    std::vector<std::size_t> members;
    bool active;
  };
  std::vector<Slot> slots;
  slots.reserve(n);
  for (std::size_t i = 0; i < n; ++i) slots.push_back({i, i, {i}, true});

  MergeTree tree;
  tree.leaf_count = n;
  tree.merges.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t a = 0; a < n; ++a) {
      if (!slots[a].active) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!slots[b].active) continue;
        const double v = d[a * n + b];
        // Order the pair by member-minimum leaf index for the tie-break key.
        std::size_t lo = slots[a].min_leaf, hi = slots[b].min_leaf;
        if (lo > hi) std::swap(lo, hi);
        bool take = !found || v < best;
        if (found && v == best) {
          std::size_t blo = slots[best_a].min_leaf, bhi = slots[best_b].min_leaf;
          if (blo > bhi) std::swap(blo, bhi);
          take = lo < blo || (lo == blo && hi < bhi);
        }
        if (take) {
          best = v;
          best_a = a;
          best_b = b;
          found = true;
        }
      }
    }

    Slot& sa = slots[best_a];
    Slot& sb = slots[best_b];
    const Slot& left = sa.min_leaf < sb.min_leaf ? sa : sb;
    const Slot& right = sa.min_leaf < sb.min_leaf ? sb : sa;

    Merge m;
    m.left = left.ref;
    m.right = right.ref;
    m.height = best;
    m.members.reserve(sa.members.size() + sb.members.size());
    std::merge(sa.members.begin(), sa.members.end(), sb.members.begin(), sb.members.end(),
               std::back_inserter(m.members));

    const double ni = static_cast<double>(sa.members.size());
    const double nj = static_cast<double>(sb.members.size());
    const double dij = d[best_a * n + best_b];
    for (std::size_t k = 0; k < n; ++k) {
      if (!slots[k].active || k == best_a || k == best_b) continue;
      const double nk = static_cast<double>(slots[k].members.size());
      const double v = detail::lance_williams(cfg.linkage, d[k * n + best_a], d[k * n + best_b],
                                              dij, ni, nj, nk);
      d[k * n + best_a] = d[best_a * n + k] = v;
    }

    sa.ref = n + step;
    sa.min_leaf = std::min(sa.min_leaf, sb.min_leaf);
    sa.members = m.members;
    sb.active = false;
    sb.members.clear();
    tree.merges.push_back(std::move(m));
  }
  return tree;
}

// Center of every node, indexed by NodeRef: the leaf vector itself for
// leaves, the mean of member leaf vectors for internal nodes.
inline std::vector<Vector> cluster_centers(const MergeTree& tree, const EmbeddingSet& set) {
  if (set.size() != tree.leaf_count) {
    throw InputError("merge tree has " + std::to_string(tree.leaf_count) + " leaves but set has " +
                     std::to_string(set.size()) + " records");
  }
  std::vector<Vector> centers;
  centers.reserve(tree.node_count());
  for (const auto& r : set) centers.push_back(r.vector);
  for (const auto& m : tree.merges) {
    std::vector<Vector> vs;
    vs.reserve(m.members.size());
    for (std::size_t leaf : m.members) vs.push_back(set[leaf].vector);
    centers.push_back(mean_vector(vs));
  }
  return centers;
}

}  // namespace ontox
