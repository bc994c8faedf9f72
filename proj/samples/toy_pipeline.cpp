// Builds the cat/dog/car toy ontology from the files in samples/data, prints
// it as contextualized text and classifies the toy samples down the tree.

#include <iostream>

#include "ontox/commands.hpp"

int main() {
  using namespace ontox;
  const std::string data = ONTOX_SAMPLES_DIR "/data";
  try {
    const auto leaves = load_embeddings(data + "/toy_leaves.jsonl");
    const auto bank = load_bank(data + "/toy_bank.tsv", BankFilter{});
    const auto cand_set = load_embeddings(data + "/toy_candidates.jsonl");
    const CandidateEmbeddings cand(cand_set);

    const auto res = cmd::extract_ontology(leaves, bank, cand, {Metric::manhattan, Linkage::complete});
    std::cout << "extracted ontology:\n";
    visit_preorder(res.tree.root, [](const OntologyNode& n, std::size_t depth) {
      std::cout << std::string(2 * depth + 2, ' ') << n.label << (n.decoded ? "" : " (undecoded)") << '\n';
    });

    std::cout << "\ncontextualized leaves:\n";
    for (const auto& line : contextualize_all(res.tree)) std::cout << "  " << line.leaf << ": " << line.text << '\n';

    std::cout << "\nhierarchical inference (cosine):\n";
    const auto samples = load_embeddings(data + "/toy_samples.jsonl");
    for (const auto& s : samples) {
      const auto r = tree_infer(s.vector, res.tree, {Metric::cosine, std::nullopt, 1});
      std::cout << "  " << s.id << " -> " << r.label << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
