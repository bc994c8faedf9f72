#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ontox/commands.hpp"
#include "support/oracles.hpp"

using namespace ontox;
namespace fs = std::filesystem;

namespace {

const std::string kData = ONTOX_SAMPLES_DIR "/data";

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ontox_cmd_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  // Runs the CLI; returns its exit code and leaves stderr in `err.txt`.
  int cli(const std::string& args) const {
    const std::string cmd = std::string(ONTOX_CLI_PATH) + " " + args + " >" + path("out.txt") + " 2>" + path("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  cmd::ExtractOptions toy_extract() const {
    cmd::ExtractOptions o;
    o.leaves = kData + "/toy_leaves.jsonl";
    o.bank = kData + "/toy_bank.tsv";
    o.candidates = kData + "/toy_candidates.jsonl";
    o.out = path("tree.json");
    o.dot = path("tree.dot");
    return o;
  }

  fs::path dir_;
};

std::vector<std::string> predicted_column(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::vector<std::string> out;
  for (const auto& r : read_predictions(in)) out.push_back(r.predicted);
  return out;
}

}  // namespace

TEST_F(Commands, ExtractToyTree) {
  std::ostringstream log;
  auto res = cmd::run_extract(toy_extract(), log);
  const auto& root = res.tree.root;
  EXPECT_EQ(root.label, "object");
  ASSERT_EQ(root.children.size(), 2u);
  EXPECT_EQ(root.children[0].label, "animal");
  EXPECT_EQ(root.children[0].children[0].label, "cat");
  EXPECT_EQ(root.children[0].children[1].label, "dog");
  EXPECT_EQ(root.children[1].label, "car");
  // "loyal" is a candidate of the animal cluster with no embedding.
  EXPECT_TRUE(res.missing_candidates.contains("loyal"));
  EXPECT_NE(log.str().find("'loyal'"), std::string::npos);

  auto loaded = load_ontology(path("tree.json"));
  EXPECT_EQ(loaded.root, res.tree.root);
  EXPECT_EQ(loaded.metadata["affinity"], "manhattan");
  EXPECT_NE(slurp(path("tree.dot")).find("digraph"), std::string::npos);

  auto manifest = nlohmann::json::parse(slurp(path("tree.json.manifest.json")));
  EXPECT_EQ(manifest["command"], "extract");
  EXPECT_EQ(manifest["inputs"].size(), 3u);
  EXPECT_EQ(manifest["tool_version"], kToolVersion);
  EXPECT_EQ(manifest["inputs"][kData + "/toy_bank.tsv"].get<std::string>().rfind("sha256:", 0), 0u);
}

TEST_F(Commands, ExtractIsDeterministic) {
  std::ostringstream log;
  cmd::run_extract(toy_extract(), log);
  const auto first = slurp(path("tree.json"));
  const auto first_manifest = slurp(path("tree.json.manifest.json"));
  cmd::run_extract(toy_extract(), log);
  EXPECT_EQ(slurp(path("tree.json")), first);
  EXPECT_EQ(slurp(path("tree.json.manifest.json")), first_manifest);
}

TEST_F(Commands, ExtractFallsBackWhenNoCandidates) {
  write("leaves.jsonl",
        R"({"id": "a", "label": "alpha", "modality": "text", "vector": [0, 1]})"
        "\n"
        R"({"id": "b", "label": "beta", "modality": "text", "vector": [1, 0]})"
        "\n");
  write("bank.tsv", "isA\tgamma\tdelta\t1\n");
  write("cands.jsonl", R"({"id": "d", "label": "delta", "modality": "text", "vector": [1, 1]})" "\n");
  auto o = toy_extract();
  o.leaves = path("leaves.jsonl");
  o.bank = path("bank.tsv");
  o.candidates = path("cands.jsonl");
  std::ostringstream log;
  auto res = cmd::run_extract(o, log);
  // Two leaves give a three-node tree.
  EXPECT_EQ(res.tree.root.children.size(), 2u);
  EXPECT_EQ(res.tree.root.label, "node-0");
  EXPECT_FALSE(res.tree.root.decoded);
  EXPECT_EQ(res.undecoded, (std::vector<std::string>{"node-0"}));
}

TEST_F(Commands, ExtractPoolsFewShotLeaves) {
  write("leaves.jsonl",
        R"({"id": "i1", "label": "cat", "modality": "image", "vector": [1, 0.2, 0]})"
        "\n"
        R"({"id": "i2", "label": "cat", "modality": "image", "vector": [1, 0.2, 0.1]})"
        "\n"
        R"({"id": "i3", "label": "dog", "modality": "image", "vector": [0.9, 0.3, 0.1]})"
        "\n"
        R"({"id": "i4", "label": "car", "modality": "image", "vector": [0, 0.1, 1]})"
        "\n");
  auto o = toy_extract();
  o.leaves = path("leaves.jsonl");
  std::ostringstream log;
  auto res = cmd::run_extract(o, log);
  EXPECT_EQ(leaf_count(res.tree.root), 3u);
}

TEST_F(Commands, InferNaiveAndFlatTreeAgree) {
  std::mt19937_64 rng(61);
  std::ostringstream leaves, samples;
  std::vector<Vector> lv;
  for (int i = 0; i < 10; ++i) lv.push_back(oracle::random_vector(rng, 8));
  write_embeddings(leaves, oracle::make_set(lv, "leaf"));
  std::vector<Vector> sv;
  for (int i = 0; i < 500; ++i) sv.push_back(oracle::random_vector(rng, 8));
  write_embeddings(samples, oracle::make_set(sv, "s"));
  write("leaves.jsonl", leaves.str());
  write("samples.jsonl", samples.str());

  cmd::InferOptions o;
  o.leaves = path("leaves.jsonl");
  o.samples = path("samples.jsonl");
  o.out = path("tree.csv");
  o.mode = cmd::InferMode::tree;
  cmd::run_infer(o);
  o.out = path("naive.csv");
  o.mode = cmd::InferMode::naive;
  cmd::run_infer(o);
  EXPECT_EQ(predicted_column(slurp(path("tree.csv"))), predicted_column(slurp(path("naive.csv"))));

  o.out = path("outliers.csv");
  o.mode = cmd::InferMode::tree;
  o.cfg.outlier_threshold = 1e-12;
  auto rows = cmd::run_infer(o);
  for (const auto& r : rows) EXPECT_EQ(r.kind, ResultKind::outlier);

  o.out = path("knn.csv");
  o.mode = cmd::InferMode::knn;
  o.cfg.outlier_threshold.reset();
  o.cfg.k = 1;
  cmd::run_infer(o);
  EXPECT_EQ(predicted_column(slurp(path("knn.csv"))), predicted_column(slurp(path("naive.csv"))));
}

TEST_F(Commands, InferTenThousandSamplesQuickly) {
  std::mt19937_64 rng(62);
  std::vector<Vector> lv;
  for (int i = 0; i < 10; ++i) lv.push_back(oracle::random_vector(rng, 512));
  auto leaves = oracle::make_set(lv, "leaf");
  auto set = agglomerate(leaves, {Metric::manhattan, Linkage::complete});
  std::map<NodeRef, NodeLabel> labels;
  for (std::size_t k = 0; k < set.merges.size(); ++k) labels[set.leaf_count + k] = {"p" + std::to_string(k), true};
  save_ontology(build_ontology(set, leaves, cluster_centers(set, leaves), labels), path("tree.json"));
  {
    std::ofstream out(path("samples.jsonl"));
    std::vector<EmbeddingRecord> recs;
    for (int i = 0; i < 10000; ++i) recs.push_back({"s" + std::to_string(i), "?", Modality::image, oracle::random_vector(rng, 512)});
    write_embeddings(out, EmbeddingSet::from_records(std::move(recs)));
  }
  cmd::InferOptions o;
  o.tree = path("tree.json");
  o.samples = path("samples.jsonl");
  o.out = path("pred.csv");
  const auto t0 = std::chrono::steady_clock::now();
  auto rows = cmd::run_infer(o);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(rows.size(), 10000u);
  EXPECT_LT(secs, 5.0);
}

TEST_F(Commands, InferDimensionMismatch) {
  cmd::InferOptions o;
  o.tree = kData + "/cifar10_given_tree.json";
  o.leaves = kData + "/toy_leaves.jsonl";
  o.samples = kData + "/toy_samples.jsonl";
  o.out = path("p.csv");
  // The toy leaves do not cover the CIFAR labels.
  EXPECT_THROW(cmd::run_infer(o), InputError);

  write("s2.jsonl", R"({"id": "x", "label": "x", "modality": "image", "vector": [1, 2]})" "\n");
  o.tree.reset();
  o.samples = path("s2.jsonl");
  EXPECT_THROW(cmd::run_infer(o), InputError);
}

TEST_F(Commands, EvalToyPipeline) {
  std::ostringstream log;
  cmd::run_extract(toy_extract(), log);
  cmd::InferOptions in;
  in.tree = path("tree.json");
  in.samples = kData + "/toy_samples.jsonl";
  in.out = path("tree.csv");
  cmd::run_infer(in);
  in.mode = cmd::InferMode::naive;
  in.out = path("naive.csv");
  cmd::run_infer(in);

  cmd::EvalOptions ev{path("naive.csv"), path("tree.csv"), kData + "/toy_truth.csv", path("report.json")};
  std::ostringstream table;
  auto rep = cmd::run_eval(ev, table);
  EXPECT_DOUBLE_EQ(*rep.accuracy_naive, 1.0);
  EXPECT_DOUBLE_EQ(*rep.fidelity_ratio, 1.0);
  EXPECT_NE(table.str().find("fidelity_ratio"), std::string::npos);
  auto j = nlohmann::json::parse(slurp(path("report.json")));
  EXPECT_EQ(j["agreement"], 1.0);

  ev.pred_b = path("naive.csv");
  EXPECT_DOUBLE_EQ(*cmd::run_eval(ev, table).agreement, 1.0);
}

TEST_F(Commands, ContextualizeViTTree) {
  cmd::ContextualizeOptions o{kData + "/cifar10_vit_l14_tree.json", path("ctx.txt")};
  cmd::run_contextualize(o);
  const auto text = slurp(path("ctx.txt"));
  EXPECT_NE(text.find("vehicle type, motor vehicle, car\n"), std::string::npos);
  EXPECT_NE(text.find("animal, canine, pet, feline, cat\n"), std::string::npos);
}

TEST_F(Commands, VerifyWithPlainLeavesMatchesNaive) {
  cmd::VerifyOptions o;
  o.samples = kData + "/toy_samples.jsonl";
  o.leaves = kData + "/toy_leaves.jsonl";
  o.truth = kData + "/toy_truth.csv";
  o.out = path("verify.json");
  o.template_tag = "{}";
  std::ostringstream table;
  auto rep = cmd::run_verify(o, table);
  EXPECT_DOUBLE_EQ(rep.accuracy, 1.0);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("verify.json")))["template"], "{}");
}

// Exit codes through the actual binary.

TEST_F(Commands, CliExitCodes) {
  const std::string toy = "--leaves " + kData + "/toy_leaves.jsonl --bank " + kData + "/toy_bank.tsv --candidates " +
                          kData + "/toy_candidates.jsonl";
  EXPECT_EQ(cli("extract " + toy + " --affinity manhattan --linkage complete --out " + path("t.json")), 0);
  EXPECT_TRUE(fs::exists(path("t.json.manifest.json")));

  EXPECT_EQ(cli("extract " + toy + " --affinity cosine --linkage ward --out " + path("w.json")), 2);
  EXPECT_NE(slurp(path("err.txt")).find("ward requires euclidean affinity"), std::string::npos);

  EXPECT_EQ(cli("extract " + toy + " --affinity chebyshev --linkage ward --out " + path("w.json")), 2);
  EXPECT_EQ(cli("bogus"), 2);
  EXPECT_EQ(cli("--help"), 0);

  write("bad.jsonl", R"({"id": "a", "label": "a", "modality": "text", "vector": [1, 2]})" "\n" "{oops\n");
  EXPECT_EQ(cli("extract --leaves " + path("bad.jsonl") + " --bank " + kData + "/toy_bank.tsv --candidates " + kData +
                "/toy_candidates.jsonl --affinity manhattan --linkage complete --out " + path("x.json")),
            2);
  EXPECT_NE(slurp(path("err.txt")).find("line 2"), std::string::npos);

  EXPECT_EQ(cli("infer --tree " + path("t.json") + " --samples " + kData + "/toy_samples.jsonl --out " + path("p.csv")), 0);
  EXPECT_EQ(cli("infer --tree " + path("t.json") + " --samples " + kData +
                "/toy_samples.jsonl --mode naive --out " + path("n.csv")),
            0);
  EXPECT_EQ(cli("eval --pred-a " + path("n.csv") + " --pred-b " + path("p.csv") + " --truth " + kData +
                "/toy_truth.csv --out " + path("r.json")),
            0);

  write("nohead.csv", "s1,cat\ns2,dog\ns3,car\ns4,car\n");
  EXPECT_EQ(cli("eval --pred-a " + path("n.csv") + " --truth " + path("nohead.csv") + " --out " + path("r2.json")), 2);

  write("s2.jsonl", R"({"id": "x", "label": "x", "modality": "image", "vector": [1, 2]})" "\n");
  EXPECT_EQ(cli("infer --tree " + path("t.json") + " --samples " + path("s2.jsonl") + " --out " + path("p2.csv")), 2);

  EXPECT_EQ(cli("contextualize --tree " + kData + "/cifar10_vit_l14_tree.json --out " + path("c.txt")), 0);
}
