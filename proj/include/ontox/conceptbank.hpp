#pragma once

// Knowledge-graph concept bank: edge dump ingestion, parent-candidate
// collection and decoding of cluster centers to concept labels.
//
// Dump format is TSV without header: relation, start term, end term, weight.
// Edges read as "start <relation> end" in the ConceptNet sense
// (isA cat animal: a cat is an animal), so the parent candidates of a leaf
// are the end terms of edges starting at that leaf.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ontox/error.hpp"
#include "ontox/vecstore.hpp"

namespace ontox {

// Relations that count as "is a parent of" for candidate collection.
inline const std::vector<std::string>& default_relations() {
  static const std::vector<std::string> rels{"hasA", "isA", "partOf", "HasProperty", "MadeOf"};
  return rels;
}

// Lowercase, underscores to spaces, surrounding whitespace trimmed.
inline std::string normalize_term(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) {
    if (c == '_') {
      s.push_back(' ');
    } else {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

namespace detail {
inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace detail

struct ConceptEdge {
  std::string relation;
  std::string start;
  std::string end;
  double weight = 1.0;

  friend bool operator==(const ConceptEdge&, const ConceptEdge&) = default;
};

class ConceptBank {
 public:
  ConceptBank() = default;

  explicit ConceptBank(std::vector<ConceptEdge> edges) : edges_(std::move(edges)) {
    for (const auto& e : edges_) {
      parents_[e.start].insert(e.end);
      holders_[e.end].insert(e.start);
    }
  }

  const std::vector<ConceptEdge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

  // End terms of edges starting at `term` (term must be normalized).
  const std::set<std::string>& parents_of(const std::string& term) const {
    auto it = parents_.find(term);
    return it == parents_.end() ? empty_set() : it->second;
  }

  // Start terms of edges ending at `term`.
  const std::set<std::string>& holders_of(const std::string& term) const {
    auto it = holders_.find(term);
    return it == holders_.end() ? empty_set() : it->second;
  }

 private:
  static const std::set<std::string>& empty_set() {
    static const std::set<std::string> s;
    return s;
  }

  std::vector<ConceptEdge> edges_;
  std::unordered_map<std::string, std::set<std::string>> parents_;
  std::unordered_map<std::string, std::set<std::string>> holders_;
};

struct BankFilter {
  std::vector<std::string> relations = default_relations();
  double min_weight = 0.0;
};

inline ConceptBank read_bank(std::istream& in, const BankFilter& filter) {
  std::set<std::string> wanted;
  for (const auto& r : filter.relations) wanted.insert(detail::lower(r));

  std::vector<ConceptEdge> edges;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto tab = rest.find('\t');
      cols.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (cols.size() != 4) {
      throw InputError("malformed row " + std::to_string(row) + ": expected 4 columns, got " +
                       std::to_string(cols.size()));
    }

    auto wtext = cols[3];
    while (!wtext.empty() && std::isspace(static_cast<unsigned char>(wtext.front()))) wtext.remove_prefix(1);
    while (!wtext.empty() && std::isspace(static_cast<unsigned char>(wtext.back()))) wtext.remove_suffix(1);
    double w = 0.0;
    auto [ptr, ec] = std::from_chars(wtext.data(), wtext.data() + wtext.size(), w);
    if (ec != std::errc{} || ptr != wtext.data() + wtext.size() || wtext.empty() || !std::isfinite(w)) {
      throw InputError("non-numeric weight at row " + std::to_string(row) + ": '" +
                       std::string(cols[3]) + "'");
    }
    if (w < 0.0) throw InputError("negative weight at row " + std::to_string(row));

    if (!wanted.contains(detail::lower(cols[0]))) continue;
    if (w < filter.min_weight) continue;
    auto start = normalize_term(cols[1]);
    auto end = normalize_term(cols[2]);
    if (start.empty() || end.empty()) {
      throw InputError("empty term at row " + std::to_string(row));
    }
    edges.push_back({std::string(cols[0]), std::move(start), std::move(end), w});
  }
  return ConceptBank(std::move(edges));
}

inline ConceptBank load_bank(const std::string& path, const BankFilter& filter = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open concept bank '" + path + "'");
  try {
    return read_bank(in, filter);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_bank(std::ostream& out, const ConceptBank& bank) {
  std::ostringstream w;
  w.precision(17);
  for (const auto& e : bank.edges()) {
    w.str({});
    w << e.weight;
    out << e.relation << '\t' << e.start << '\t' << e.end << '\t' << w.str() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Candidate sets

struct CandidateSet {
  std::vector<std::string> concepts;                           // sorted, unique
  std::map<std::string, std::set<std::string>> provenance;    // concept -> leaves

  bool empty() const { return concepts.empty(); }
  std::size_t size() const { return concepts.size(); }
};

// Union of the parents of every given leaf. Leaf labels themselves, and any
// term in `exclude`, never become candidates.
inline CandidateSet parent_candidates(const ConceptBank& bank, std::span<const std::string> leaves,
                                      std::span<const std::string> exclude = {}) {
  std::set<std::string> banned;
  for (const auto& l : leaves) banned.insert(normalize_term(l));
  for (const auto& l : exclude) banned.insert(normalize_term(l));

  CandidateSet out;
  for (const auto& leaf : leaves) {
    for (const auto& p : bank.parents_of(normalize_term(leaf))) {
      if (banned.contains(p)) continue;
      out.provenance[p].insert(leaf);
    }
  }
  out.concepts.reserve(out.provenance.size());
  for (const auto& [concept_term, _] : out.provenance) out.concepts.push_back(concept_term);
  return out;
}

// Candidate-concept embeddings keyed by normalized label; multiple records
// per label are mean-pooled.
class CandidateEmbeddings {
 public:
  CandidateEmbeddings() = default;
  explicit CandidateEmbeddings(const EmbeddingSet& set) : dim_(set.dim()) {
    for (auto& lv : pool_by_label(set)) {
      auto key = normalize_term(lv.label);
      table_.try_emplace(std::move(key), std::move(lv.vector));
    }
  }

  std::size_t dim() const { return dim_; }
  bool contains(const std::string& concept_term) const { return table_.contains(normalize_term(concept_term)); }
  const Vector* find(const std::string& concept_term) const {
    auto it = table_.find(normalize_term(concept_term));
    return it == table_.end() ? nullptr : &it->second;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vector> table_;
};

// Split a candidate set into the part with embeddings and the missing terms.
inline std::pair<CandidateSet, std::vector<std::string>> covered_candidates(
    const CandidateSet& candidates, const CandidateEmbeddings& embeddings) {
  CandidateSet covered;
  std::vector<std::string> missing;
  for (const auto& c : candidates.concepts) {
    if (embeddings.contains(c)) {
      covered.concepts.push_back(c);
      covered.provenance.emplace(c, candidates.provenance.at(c));
    } else {
      missing.push_back(c);
    }
  }
  return {std::move(covered), std::move(missing)};
}

struct Decoded {
  std::string label;
  double distance = 0.0;
};

// Nearest candidate to `center` in euclidean distance; equal distances go to
// the lexicographically smallest label.
inline Decoded decode_center(std::span<const double> center, const CandidateSet& candidates,
                             const CandidateEmbeddings& embeddings) {
  if (candidates.empty()) throw InputError("empty candidate set");
  std::optional<Decoded> best;
  for (const auto& c : candidates.concepts) {
    const Vector* e = embeddings.find(c);
    if (e == nullptr) throw InputError("missing embedding for candidate concept '" + c + "'");
    const double d = distance(center, *e, Metric::euclidean);
    if (!best || d < best->distance || (d == best->distance && c < best->label)) {
      best = Decoded{c, d};
    }
  }
  return *best;
}

inline Decoded decode_center(std::span<const double> center, const CandidateSet& candidates,
                             const EmbeddingSet& candidate_embeddings) {
  return decode_center(center, candidates, CandidateEmbeddings(candidate_embeddings));
}

}  // namespace ontox
