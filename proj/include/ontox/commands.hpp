#pragma once

// The command implementations behind the `ontox` CLI. Each command is a pure
// function of its input files and options, writes its outputs plus a
// `<out>.manifest.json`, and reports validation problems as InputError.

#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "ontox/conceptbank.hpp"
#include "ontox/evalkit.hpp"
#include "ontox/hac.hpp"
#include "ontox/inference.hpp"
#include "ontox/manifest.hpp"
#include "ontox/ontology.hpp"
#include "ontox/vecstore.hpp"

namespace ontox::cmd {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

// Duplicate labels (e.g. per-image few-shot records) collapse to one pooled
// record per label, identified by the label.
inline EmbeddingSet one_per_label(const EmbeddingSet& set) {
  auto pooled = pool_by_label(set);
  if (pooled.size() == set.size()) return set;
  std::vector<EmbeddingRecord> recs;
  recs.reserve(pooled.size());
  for (auto& lv : pooled) {
    recs.push_back({lv.label, lv.label, set[0].modality, std::move(lv.vector)});
  }
  return EmbeddingSet::from_records(std::move(recs));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// extract

struct ExtractOptions {
  std::string leaves;
  std::string bank;
  std::string candidates;
  std::string out;
  std::optional<std::string> dot;
  ClusterConfig cluster{Metric::manhattan, Linkage::complete};
  BankFilter filter;
};

struct ExtractResult {
  OntologyTree tree;
  std::vector<std::string> undecoded;           // ids of fallback-labeled nodes
  std::set<std::string> missing_candidates;     // candidate terms lacking embeddings
};

// Cluster the leaves, label every merge with its nearest parent candidate
// (falling back to the node id when no candidate is available) and assemble
// the labeled tree. No files are touched.
inline ExtractResult extract_ontology(const EmbeddingSet& raw_leaves, const ConceptBank& bank,
                                      const CandidateEmbeddings& candidate_embeddings,
                                      const ClusterConfig& cfg) {
  cfg.validate();
  const EmbeddingSet leaves = detail::one_per_label(raw_leaves);
  if (candidate_embeddings.dim() != 0 && candidate_embeddings.dim() != leaves.dim()) {
    throw InputError("dimension mismatch: leaves have " + std::to_string(leaves.dim()) +
                     ", candidate embeddings " + std::to_string(candidate_embeddings.dim()));
  }
  const MergeTree tree = agglomerate(leaves, cfg);
  const auto centers = cluster_centers(tree, leaves);

  std::vector<std::string> all_labels;
  for (const auto& r : leaves) all_labels.push_back(r.label);

  ExtractResult res;
  std::map<NodeRef, NodeLabel> labels;
  for (std::size_t k = 0; k < tree.merges.size(); ++k) {
    const NodeRef ref = tree.leaf_count + k;
    std::vector<std::string> cluster_labels;
    for (std::size_t leaf : tree.merges[k].members) cluster_labels.push_back(leaves[leaf].label);

    const auto candidates = parent_candidates(bank, cluster_labels, all_labels);
    auto [covered, missing] = covered_candidates(candidates, candidate_embeddings);
    res.missing_candidates.insert(missing.begin(), missing.end());
    if (covered.empty()) {
      labels[ref] = {internal_node_id(k), false};
      res.undecoded.push_back(internal_node_id(k));
    } else {
      labels[ref] = {decode_center(centers[ref], covered, candidate_embeddings).label, true};
    }
  }

  res.tree = build_ontology(tree, leaves, centers, labels);
  nlohmann::json heights = nlohmann::json::object();
  for (std::size_t k = 0; k < tree.merges.size(); ++k) heights[internal_node_id(k)] = tree.merges[k].height;
  res.tree.metadata["affinity"] = std::string(to_string(cfg.affinity));
  res.tree.metadata["linkage"] = std::string(to_string(cfg.linkage));
  res.tree.metadata["merge_heights"] = heights;
  res.tree.metadata["undecoded"] = res.undecoded;
  res.tree.metadata["missing_candidates"] = res.missing_candidates;
  return res;
}

inline ExtractResult run_extract(const ExtractOptions& opt, std::ostream& log) {
  opt.cluster.validate();
  const auto leaves = load_embeddings(opt.leaves);
  const auto bank = load_bank(opt.bank, opt.filter);
  const auto cand_set = load_embeddings(opt.candidates);
  const CandidateEmbeddings cand(cand_set);

  auto res = extract_ontology(leaves, bank, cand, opt.cluster);
  res.tree.metadata["tool_version"] = kToolVersion;
  res.tree.metadata["relations"] = opt.filter.relations;
  res.tree.metadata["min_weight"] = opt.filter.min_weight;
  res.tree.metadata["leaves_modality"] = std::string(to_string(leaves[0].modality));

  if (!res.missing_candidates.empty()) {
    log << "warning: " << res.missing_candidates.size() << " candidate concept(s) have no embedding:";
    for (const auto& c : res.missing_candidates) log << " '" << c << "'";
    log << '\n';
  }
  for (const auto& id : res.undecoded) log << "warning: node " << id << " has no candidate; left undecoded\n";

  RunManifest manifest;
  manifest.command = "extract";
  manifest.config = {{"affinity", std::string(to_string(opt.cluster.affinity))},
                     {"linkage", std::string(to_string(opt.cluster.linkage))},
                     {"min_weight", opt.filter.min_weight},
                     {"relations", opt.filter.relations},
                     {"dot", opt.dot ? nlohmann::ordered_json(*opt.dot) : nlohmann::ordered_json(nullptr)}};
  manifest.add_input(opt.leaves);
  manifest.add_input(opt.bank);
  manifest.add_input(opt.candidates);

  save_ontology(res.tree, opt.out);
  manifest.write_for(opt.out);
  if (opt.dot) {
    detail::open_out(*opt.dot) << export_dot(res.tree);
    manifest.write_for(*opt.dot);
  }
  return res;
}

// ---------------------------------------------------------------------------
// infer

enum class InferMode { tree, naive, knn };

inline InferMode parse_infer_mode(std::string_view s) {
  if (s == "tree") return InferMode::tree;
  if (s == "naive") return InferMode::naive;
  if (s == "knn") return InferMode::knn;
  throw InputError("unknown inference mode '" + std::string(s) + "'");
}

inline std::string_view to_string(InferMode m) {
  switch (m) {
    case InferMode::tree: return "tree";
    case InferMode::naive: return "naive";
    case InferMode::knn: return "knn";
  }
  return "?";
}

struct InferOptions {
  std::optional<std::string> tree;    // ontology JSON
  std::optional<std::string> leaves;  // leaf embeddings: fills missing centers, or a flat tree alone
  std::string samples;
  std::string out;
  InferMode mode = InferMode::tree;
  InferenceConfig cfg;
};

inline std::vector<PredictionRow> infer_all(const EmbeddingSet& samples, const OntologyTree& tree,
                                            InferMode mode, const InferenceConfig& cfg) {
  if (tree.dim && *tree.dim != samples.dim()) {
    throw InputError("dimension mismatch: tree has " + std::to_string(*tree.dim) + ", samples " +
                     std::to_string(samples.dim()));
  }
  std::vector<PredictionRow> rows;
  rows.reserve(samples.size());
  if (mode == InferMode::tree) {
    for (const auto& s : samples) {
      auto r = tree_infer(s.vector, tree, cfg);
      std::string path;
      for (std::size_t i = 0; i < r.path.size(); ++i) {
        if (i) path += path_separator();
        path += r.path[i];
      }
      rows.push_back({s.id, r.label, r.kind, std::move(path)});
    }
    return rows;
  }
  const auto table = leaf_table(tree);
  for (const auto& s : samples) {
    auto label = mode == InferMode::naive ? naive_zero_shot(s.vector, table, cfg.metric)
                                          : knn_infer(s.vector, table, cfg.metric, cfg.k);
    rows.push_back({s.id, label, ResultKind::classified, label});
  }
  return rows;
}

inline std::vector<PredictionRow> run_infer(const InferOptions& opt) {
  if (!opt.tree && !opt.leaves) throw InputError("infer needs --tree or --leaves");
  if (opt.cfg.outlier_threshold && *opt.cfg.outlier_threshold < 0.0) {
    throw InputError("outlier threshold must be non-negative");
  }
  RunManifest manifest;
  manifest.command = "infer";

  OntologyTree tree;
  if (opt.tree) {
    tree = load_ontology(*opt.tree);
    manifest.add_input(*opt.tree);
    if (opt.leaves) {
      attach_centers(tree, load_embeddings(*opt.leaves));
      manifest.add_input(*opt.leaves);
    }
  } else {
    tree = flat_ontology(load_embeddings(*opt.leaves));
    manifest.add_input(*opt.leaves);
  }
  const auto samples = load_embeddings(opt.samples);
  manifest.add_input(opt.samples);

  auto rows = infer_all(samples, tree, opt.mode, opt.cfg);

  manifest.config = {{"mode", std::string(to_string(opt.mode))},
                     {"metric", std::string(ontox::to_string(opt.cfg.metric))},
                     {"outlier_threshold", opt.cfg.outlier_threshold
                                               ? nlohmann::ordered_json(*opt.cfg.outlier_threshold)
                                               : nlohmann::ordered_json(nullptr)},
                     {"k", opt.cfg.k}};
  auto out = detail::open_out(opt.out);
  write_predictions(out, rows);
  out.close();
  manifest.write_for(opt.out);
  return rows;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string pred_a;                 // baseline (naive) predictions
  std::optional<std::string> pred_b;  // tree predictions
  std::string truth;
  std::string out;
};

inline EvalReport run_eval(const EvalOptions& opt, std::ostream& table) {
  const auto truth = load_truth(opt.truth);
  const auto a = join_truth(load_predictions(opt.pred_a), truth);
  std::optional<LabeledPredictions> b;
  if (opt.pred_b) b = join_truth(load_predictions(*opt.pred_b), truth);

  const auto report = evaluate(a, b ? &*b : nullptr);
  print_report(table, report);

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = {{"pred_b", opt.pred_b.has_value()}};
  manifest.add_input(opt.pred_a);
  if (opt.pred_b) manifest.add_input(*opt.pred_b);
  manifest.add_input(opt.truth);

  detail::open_out(opt.out) << to_json(report).dump(2) << '\n';
  manifest.write_for(opt.out);
  return report;
}

// ---------------------------------------------------------------------------
// contextualize

struct ContextualizeOptions {
  std::string tree;
  std::string out;
};

inline std::vector<ContextLine> run_contextualize(const ContextualizeOptions& opt) {
  const auto tree = load_ontology(opt.tree);
  auto lines = contextualize_all(tree);
  auto out = detail::open_out(opt.out);
  for (const auto& l : lines) out << l.text << '\n';
  out.close();

  RunManifest manifest;
  manifest.command = "contextualize";
  manifest.config = {{"separator", ", "}, {"root_excluded", true}};
  manifest.add_input(opt.tree);
  manifest.write_for(opt.out);
  return lines;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::string samples;
  std::string leaves;  // contextualized leaf embeddings, labeled by leaf
  std::string truth;
  std::string out;
  Metric metric = Metric::cosine;
  std::string template_tag;  // recorded only
};

inline ContextualReport run_verify(const VerifyOptions& opt, std::ostream& table) {
  const auto samples = load_embeddings(opt.samples);
  const auto leaves = load_embeddings(opt.leaves);
  if (samples.dim() != leaves.dim()) {
    throw InputError("dimension mismatch: samples have " + std::to_string(samples.dim()) +
                     ", leaves " + std::to_string(leaves.dim()));
  }
  const auto truth = load_truth(opt.truth);
  const auto report = verify_contextualized(samples, leaves, truth, opt.metric);

  table << "accuracy " << report.accuracy << " over " << report.n << " samples\n";
  for (const auto& [label, s] : report.per_leaf) {
    table << "  " << label << ": " << s.correct << "/" << s.total << '\n';
  }

  RunManifest manifest;
  manifest.command = "verify";
  manifest.config = {{"metric", std::string(to_string(opt.metric))}, {"template", opt.template_tag}};
  manifest.add_input(opt.samples);
  manifest.add_input(opt.leaves);
  manifest.add_input(opt.truth);

  auto j = to_json(report);
  j["template"] = opt.template_tag;
  detail::open_out(opt.out) << j.dump(2) << '\n';
  manifest.write_for(opt.out);
  return report;
}

}  // namespace ontox::cmd
