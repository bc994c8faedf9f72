#pragma once

// Labeled embedding vectors and the distance metrics shared by clustering
// and inference.
//
// Vectors are kept exactly as read (64-bit, unnormalized). Normalization is a
// property of the cosine metric, never of storage.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ontox/error.hpp"

namespace ontox {

using Vector = std::vector<double>;

enum class Modality { text, image };

inline std::string_view to_string(Modality m) {
  return m == Modality::text ? "text" : "image";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "text") return Modality::text;
  if (s == "image") return Modality::image;
  throw InputError("unknown modality '" + std::string(s) + "'");
}

struct EmbeddingRecord {
  std::string id;
  std::string label;
  Modality modality = Modality::text;
  Vector vector;
};

// Immutable, validated collection of embedding records. All records share
// one dimension, ids are unique and order is preserved as given.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  static EmbeddingSet from_records(std::vector<EmbeddingRecord> records) {
    if (records.empty()) throw InputError("empty embedding set");
    EmbeddingSet set;
    set.dim_ = records.front().vector.size();
    if (set.dim_ == 0) throw InputError("zero-length vector in record '" + records.front().id + "'");
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.vector.size() != set.dim_) {
        throw InputError("dimension mismatch at record " + std::to_string(i + 1) + " ('" + r.id +
                         "'): expected " + std::to_string(set.dim_) + ", got " +
                         std::to_string(r.vector.size()));
      }
      for (double x : r.vector) {
        if (!std::isfinite(x)) throw InputError("non-finite component in record '" + r.id + "'");
      }
      if (!ids.insert(r.id).second) throw InputError("duplicate id '" + r.id + "'");
    }
    set.records_ = std::move(records);
    return set;
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<EmbeddingRecord>& records() const { return records_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

 private:
  std::size_t dim_ = 0;
  std::vector<EmbeddingRecord> records_;
};

// ---------------------------------------------------------------------------
// Metrics

enum class Metric { manhattan, euclidean, cosine };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::manhattan: return "manhattan";
    case Metric::euclidean: return "euclidean";
    case Metric::cosine: return "cosine";
  }
  return "?";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "manhattan") return Metric::manhattan;
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw InputError("unknown metric '" + std::string(s) + "'");
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Manhattan: sum |a_i - b_i|. Euclidean: sqrt(sum (a_i - b_i)^2).
// Cosine: 1 - a.b / (|a| |b|), clamped to [0, 2] against rounding.
inline double distance(std::span<const double> a, std::span<const double> b, Metric m) {
  if (a.size() != b.size()) {
    throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  switch (m) {
    case Metric::manhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      return s;
    }
    case Metric::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case Metric::cosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na <= 0.0 || nb <= 0.0) throw InputError("zero-norm vector under cosine distance");
      const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
      return d < 0.0 ? 0.0 : (d > 2.0 ? 2.0 : d);
    }
  }
  return 0.0;
}

// Component-wise arithmetic mean.
inline Vector mean_vector(std::span<const Vector> vs) {
  if (vs.empty()) throw InputError("mean of empty vector list");
  Vector out(vs.front().size(), 0.0);
  for (const auto& v : vs) {
    if (v.size() != out.size()) throw InputError("dimension mismatch in mean");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vs.size());
  for (double& x : out) x /= n;
  return out;
}

inline Vector mean_vector(std::initializer_list<Vector> vs) {
  return mean_vector(std::span<const Vector>(vs.begin(), vs.size()));
}

// One vector per distinct label, in order of first appearance. Records
// sharing a label (e.g. few-shot image leaves) are mean-pooled.
struct LabeledVector {
  std::string label;
  Vector vector;
};

inline std::vector<LabeledVector> pool_by_label(const EmbeddingSet& set) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Vector>> groups;
  for (const auto& r : set) {
    auto [it, fresh] = groups.try_emplace(r.label);
    if (fresh) order.push_back(r.label);
    it->second.push_back(r.vector);
  }
  std::vector<LabeledVector> out;
  out.reserve(order.size());
  for (auto& label : order) {
    const auto& vs = groups.at(label);
    out.push_back({label, vs.size() == 1 ? vs.front() : mean_vector(vs)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines I/O

inline EmbeddingRecord parse_embedding_line(std::string_view line, std::size_t line_no) {
  const auto where = " at line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::out_of_range&) {
    // Number literals beyond double range (e.g. 1e999) land here.
    throw InputError("non-finite component" + where);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed line" + where + ": " + e.what());
  }
  if (!j.is_object()) throw InputError("malformed line" + where + ": expected an object");
  EmbeddingRecord rec;
  try {
    rec.id = j.at("id").get<std::string>();
    rec.label = j.at("label").get<std::string>();
    rec.modality = parse_modality(j.at("modality").get<std::string>());
    const auto& v = j.at("vector");
    if (!v.is_array()) throw InputError("'vector' is not an array");
    rec.vector.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) throw InputError("non-numeric vector component");
      rec.vector.push_back(x.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed line" + where + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError("malformed line" + where + ": " + e.what());
  }
  for (double x : rec.vector) {
    if (!std::isfinite(x)) throw InputError("non-finite component" + where);
  }
  return rec;
}

inline EmbeddingSet read_embeddings(std::istream& in) {
  std::vector<EmbeddingRecord> records;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto rec = parse_embedding_line(line, line_no);
    if (records.empty()) {
      dim = rec.vector.size();
      if (dim == 0) throw InputError("empty vector at line " + std::to_string(line_no));
    } else if (rec.vector.size() != dim) {
      throw InputError("dimension mismatch at line " + std::to_string(line_no));
    }
    if (!ids.insert(rec.id).second) {
      throw InputError("duplicate id '" + rec.id + "' at line " + std::to_string(line_no));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw InputError("empty embedding set");
  return EmbeddingSet::from_records(std::move(records));
}

inline EmbeddingSet load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embedding file '" + path + "'");
  try {
    return read_embeddings(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
  for (const auto& r : set) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["label"] = r.label;
    j["modality"] = to_string(r.modality);
    j["vector"] = r.vector;
    out << j.dump() << '\n';
  }
}

}  // namespace ontox
