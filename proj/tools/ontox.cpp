// ontox: extract, apply and verify concept hierarchies in embedding spaces.
//
// Exit codes: 0 success, 2 input/validation error, 1 internal error.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ontox/commands.hpp"

namespace {

const std::vector<std::string> kMetrics{"manhattan", "euclidean", "cosine"};
const std::vector<std::string> kLinkages{"ward", "complete", "average", "single"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-hierarchy extraction and verification for embedding spaces"};
  app.set_version_flag("--version", std::string(ontox::kToolVersion));
  app.require_subcommand(1);

  // extract
  ontox::cmd::ExtractOptions ex;
  std::string ex_affinity, ex_linkage;
  std::optional<std::string> ex_dot;
  auto* extract = app.add_subcommand("extract", "Cluster leaf embeddings and label the hierarchy");
  extract->add_option("--leaves", ex.leaves, "Leaf embeddings (JSONL)")->required();
  extract->add_option("--bank", ex.bank, "Concept bank edges (TSV)")->required();
  extract->add_option("--candidates", ex.candidates, "Candidate concept embeddings (JSONL)")->required();
  extract->add_option("--affinity", ex_affinity, "Pointwise distance")
      ->required()
      ->check(CLI::IsMember(kMetrics));
  extract->add_option("--linkage", ex_linkage, "Cluster linkage")->required()->check(CLI::IsMember(kLinkages));
  extract->add_option("--out", ex.out, "Output ontology (JSON)")->required();
  extract->add_option("--dot", ex_dot, "Also write a Graphviz rendering");
  extract->add_option("--min-weight", ex.filter.min_weight, "Drop bank edges below this weight");
  extract->add_option("--relations", ex.filter.relations, "Bank relations that mark parents")
      ->default_str("hasA isA partOf HasProperty MadeOf");

  // infer
  ontox::cmd::InferOptions in;
  std::string in_metric = "cosine", in_mode = "tree";
  std::optional<std::string> in_tree, in_leaves;
  std::optional<double> in_threshold;
  auto* infer = app.add_subcommand("infer", "Classify sample embeddings");
  infer->add_option("--tree", in_tree, "Ontology (JSON)");
  infer->add_option("--leaves", in_leaves, "Leaf embeddings: fill missing centers, or use as a flat tree");
  infer->add_option("--samples", in.samples, "Sample embeddings (JSONL)")->required();
  infer->add_option("--metric", in_metric, "Inference distance")->check(CLI::IsMember(kMetrics));
  infer->add_option("--outlier-threshold", in_threshold, "Stop when no child is this close");
  infer->add_option("--mode", in_mode, "tree, naive or knn")->check(CLI::IsMember({"tree", "naive", "knn"}));
  infer->add_option("--k", in.cfg.k, "Neighbors for knn mode")->check(CLI::PositiveNumber);
  infer->add_option("--out", in.out, "Predictions (CSV)")->required();

  // eval
  ontox::cmd::EvalOptions ev;
  std::optional<std::string> ev_pred_b;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred-a", ev.pred_a, "Baseline (naive) predictions (CSV)")->required();
  eval->add_option("--pred-b", ev_pred_b, "Tree predictions (CSV)");
  eval->add_option("--truth", ev.truth, "Ground truth (CSV: sample_id,label)")->required();
  eval->add_option("--out", ev.out, "Report (JSON)")->required();

  // contextualize
  ontox::cmd::ContextualizeOptions cx;
  auto* contextualize = app.add_subcommand("contextualize", "Write one ancestor-chain line per leaf");
  contextualize->add_option("--tree", cx.tree, "Ontology (JSON)")->required();
  contextualize->add_option("--out", cx.out, "Output text file")->required();

  // verify
  ontox::cmd::VerifyOptions vf;
  std::string vf_metric = "cosine";
  auto* verify = app.add_subcommand("verify", "Nearest-leaf accuracy with contextualized leaf embeddings");
  verify->add_option("--samples", vf.samples, "Sample embeddings (JSONL)")->required();
  verify->add_option("--leaves", vf.leaves, "Contextualized leaf embeddings (JSONL)")->required();
  verify->add_option("--truth", vf.truth, "Ground truth (CSV: sample_id,label)")->required();
  verify->add_option("--metric", vf_metric, "Inference distance")->check(CLI::IsMember(kMetrics));
  verify->add_option("--template", vf.template_tag, "Prompt template used for the leaf embeddings");
  verify->add_option("--out", vf.out, "Report (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*extract) {
      ex.cluster.affinity = ontox::parse_metric(ex_affinity);
      ex.cluster.linkage = ontox::parse_linkage(ex_linkage);
      ex.dot = ex_dot;
      const auto res = ontox::cmd::run_extract(ex, std::cerr);
      std::cout << "wrote " << ex.out << " (" << ontox::leaf_count(res.tree.root) << " leaves, "
                << res.undecoded.size() << " undecoded)\n";
    } else if (*infer) {
      in.tree = in_tree;
      in.leaves = in_leaves;
      in.mode = ontox::cmd::parse_infer_mode(in_mode);
      in.cfg.metric = ontox::parse_metric(in_metric);
      in.cfg.outlier_threshold = in_threshold;
      const auto rows = ontox::cmd::run_infer(in);
      std::cout << "wrote " << in.out << " (" << rows.size() << " predictions)\n";
    } else if (*eval) {
      ev.pred_b = ev_pred_b;
      ontox::cmd::run_eval(ev, std::cout);
    } else if (*contextualize) {
      const auto lines = ontox::cmd::run_contextualize(cx);
      std::cout << "wrote " << cx.out << " (" << lines.size() << " lines)\n";
    } else if (*verify) {
      vf.metric = ontox::parse_metric(vf_metric);
      ontox::cmd::run_verify(vf, std::cout);
    }
  } catch (const ontox::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
