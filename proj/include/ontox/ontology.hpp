#pragma once

// Labeled concept hierarchy. An edge parent -> child reads "parent is a
// superclass of child"; leaves are the given concepts.

#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ontox/error.hpp"
#include "ontox/hac.hpp"
#include "ontox/vecstore.hpp"

namespace ontox {

struct OntologyNode {
  std::string id;
  std::string label;
  std::optional<Vector> center;
  bool decoded = true;  // false for fallback-labeled internal nodes
  std::vector<OntologyNode> children;

  bool is_leaf() const { return children.empty(); }

  friend bool operator==(const OntologyNode&, const OntologyNode&) = default;
};

struct OntologyTree {
  OntologyNode root;
  std::optional<std::size_t> dim;
  nlohmann::json metadata = nlohmann::json::object();

  friend bool operator==(const OntologyTree&, const OntologyTree&) = default;
};

// Depth-first pre-order visit; the callback receives the node and its depth.
template <typename Node, typename F>
void visit_preorder(Node& node, F&& f, std::size_t depth = 0) {
  f(node, depth);
  for (auto& c : node.children) visit_preorder(c, f, depth + 1);
}

inline std::vector<const OntologyNode*> leaves_of(const OntologyNode& node) {
  std::vector<const OntologyNode*> out;
  visit_preorder(node, [&](const OntologyNode& n, std::size_t) {
    if (n.is_leaf()) out.push_back(&n);
  });
  return out;
}

inline std::size_t leaf_count(const OntologyNode& node) {
  if (node.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : node.children) n += leaf_count(c);
  return n;
}

// Unique node ids, unique leaf labels, consistent center dimension.
inline void validate(const OntologyTree& tree) {
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> leaf_labels;
  std::optional<std::size_t> dim = tree.dim;
  visit_preorder(tree.root, [&](const OntologyNode& n, std::size_t) {
    if (n.id.empty()) throw InputError("node with empty id");
    if (!ids.insert(n.id).second) throw InputError("duplicate node id '" + n.id + "'");
    if (n.is_leaf() && !leaf_labels.insert(n.label).second) {
      throw InputError("duplicate leaf label '" + n.label + "'");
    }
    if (n.center) {
      if (n.center->empty()) throw InputError("empty center on node '" + n.id + "'");
      if (!dim) dim = n.center->size();
      if (n.center->size() != *dim) {
        throw InputError("center of node '" + n.id + "' has dimension " +
                         std::to_string(n.center->size()) + ", expected " + std::to_string(*dim));
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Construction from a dendrogram

struct NodeLabel {
  std::string label;
  bool decoded = true;
};

inline std::string internal_node_id(std::size_t merge_index) {
  return "node-" + std::to_string(merge_index);
}

// Leaves keep the records' ids and labels; internal node k (the k-th merge)
// gets id "node-<k>" and the label from `labels`.
inline OntologyTree build_ontology(const MergeTree& tree, const EmbeddingSet& set,
                                   const std::vector<Vector>& centers,
                                   const std::map<NodeRef, NodeLabel>& labels) {
  if (tree.leaf_count != set.size()) throw InputError("merge tree does not match embedding set");
  if (centers.size() != tree.node_count()) throw InputError("center table does not match merge tree");

  std::function<OntologyNode(NodeRef)> build = [&](NodeRef ref) {
    OntologyNode node;
    node.center = centers[ref];
    if (tree.is_leaf(ref)) {
      node.id = set[ref].id;
      node.label = set[ref].label;
      return node;
    }
    const std::size_t k = ref - tree.leaf_count;
    node.id = internal_node_id(k);
    auto it = labels.find(ref);
    if (it == labels.end()) throw InputError("missing label for node '" + node.id + "'");
    node.label = it->second.label;
    node.decoded = it->second.decoded;
    const Merge& m = tree.merge_at(ref);
    node.children.push_back(build(m.left));
    node.children.push_back(build(m.right));
    return node;
  };

  OntologyTree out;
  out.root = build(tree.root());
  out.dim = set.dim();
  validate(out);
  return out;
}

// One-level tree: every pooled label becomes a direct child of the root.
inline OntologyTree flat_ontology(const EmbeddingSet& set, std::string root_label = "root") {
  OntologyTree out;
  out.root.id = "root";
  out.root.label = std::move(root_label);
  auto pooled = pool_by_label(set);
  std::vector<Vector> vs;
  for (auto& lv : pooled) {
    OntologyNode leaf;
    leaf.id = "leaf:" + lv.label;
    leaf.label = lv.label;
    leaf.center = lv.vector;
    vs.push_back(std::move(lv.vector));
    out.root.children.push_back(std::move(leaf));
  }
  out.root.center = mean_vector(vs);
  out.dim = set.dim();
  validate(out);
  return out;
}

// Fill in missing centers: leaves from the (label-pooled) embeddings, internal
// nodes as the mean over all descendant leaves.
inline void attach_centers(OntologyTree& tree, const EmbeddingSet& leaves) {
  std::unordered_map<std::string, Vector> by_label;
  for (auto& lv : pool_by_label(leaves)) by_label.emplace(lv.label, std::move(lv.vector));

  // Returns the descendant leaf centers of `node` after filling it.
  std::function<void(OntologyNode&, std::vector<Vector>&)> fill = [&](OntologyNode& node,
                                                                      std::vector<Vector>& acc) {
    if (node.is_leaf()) {
      if (!node.center) {
        auto it = by_label.find(node.label);
        if (it == by_label.end()) {
          throw InputError("no embedding for leaf '" + node.label + "'");
        }
        node.center = it->second;
      }
      acc.push_back(*node.center);
      return;
    }
    std::vector<Vector> mine;
    for (auto& c : node.children) fill(c, mine);
    if (!node.center) node.center = mean_vector(mine);
    acc.insert(acc.end(), std::make_move_iterator(mine.begin()), std::make_move_iterator(mine.end()));
  };
  std::vector<Vector> all;
  fill(tree.root, all);
  if (!tree.dim) tree.dim = leaves.dim();
  validate(tree);
}

// ---------------------------------------------------------------------------
// Contextualized leaf text

// Labels on the path from the root's child down to the leaf, joined by ", ".
// The root label never appears.
inline std::string contextualize(const OntologyTree& tree, const std::string& leaf_label) {
  std::vector<const OntologyNode*> path;
  std::function<bool(const OntologyNode&)> find = [&](const OntologyNode& n) {
    path.push_back(&n);
    if (n.is_leaf() && n.label == leaf_label) return true;
    for (const auto& c : n.children) {
      if (find(c)) return true;
    }
    path.pop_back();
    return false;
  };
  if (!find(tree.root)) throw InputError("unknown leaf '" + leaf_label + "'");
  if (path.size() == 1) return path.front()->label;

  std::string out;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (i > 1) out += ", ";
    out += path[i]->label;
  }
  return out;
}

struct ContextLine {
  std::string leaf;
  std::string text;
};

// One line per leaf in depth-first child order.
inline std::vector<ContextLine> contextualize_all(const OntologyTree& tree) {
  std::vector<ContextLine> out;
  std::vector<std::string> chain;
  std::function<void(const OntologyNode&, bool)> walk = [&](const OntologyNode& n, bool is_root) {
    if (!is_root) chain.push_back(n.label);
    if (n.is_leaf()) {
      std::string text;
      if (chain.empty()) {
        text = n.label;
      } else {
        for (std::size_t i = 0; i < chain.size(); ++i) {
          if (i) text += ", ";
          text += chain[i];
        }
      }
      out.push_back({n.label, std::move(text)});
    }
    for (const auto& c : n.children) walk(c, false);
    if (!is_root) chain.pop_back();
  };
  walk(tree.root, true);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json node_to_json(const OntologyNode& n) {
  nlohmann::ordered_json j;
  j["id"] = n.id;
  j["label"] = n.label;
  j["decoded"] = n.decoded;
  if (n.center) {
    j["center"] = *n.center;
  } else {
    j["center"] = nullptr;
  }
  j["children"] = nlohmann::ordered_json::array();
  for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
  return j;
}

inline nlohmann::ordered_json to_json(const OntologyTree& tree) {
  nlohmann::ordered_json j;
  if (tree.dim) {
    j["dim"] = *tree.dim;
  } else {
    j["dim"] = nullptr;
  }
  j["metadata"] = nlohmann::ordered_json::parse(tree.metadata.dump());
  j["root"] = node_to_json(tree.root);
  return j;
}

namespace detail {

inline OntologyNode node_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": node is not an object");
  OntologyNode n;
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw InputError(where + ": missing or non-string '" + key + "'");
    }
    return j[key].get<std::string>();
  };
  n.id = str("id");
  n.label = str("label");
  const std::string here = where + "/" + n.id;
  if (j.contains("decoded")) {
    if (!j["decoded"].is_boolean()) throw InputError(here + ": 'decoded' must be a boolean");
    n.decoded = j["decoded"].get<bool>();
  }
  if (j.contains("center") && !j["center"].is_null()) {
    const auto& c = j["center"];
    if (!c.is_array()) throw InputError(here + ": 'center' must be an array or null");
    Vector v;
    v.reserve(c.size());
    for (const auto& x : c) {
      if (!x.is_number()) throw InputError(here + ": non-numeric center component");
      v.push_back(x.get<double>());
      if (!std::isfinite(v.back())) throw InputError(here + ": non-finite center component");
    }
    n.center = std::move(v);
  }
  if (j.contains("children")) {
    const auto& ch = j["children"];
    if (!ch.is_array()) throw InputError(here + ": 'children' must be an array");
    for (const auto& c : ch) n.children.push_back(node_from_json(c, here));
  }
  return n;
}

}  // namespace detail

inline OntologyTree from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("ontology: top level is not an object");
  if (!j.contains("root")) throw InputError("ontology: missing 'root'");
  OntologyTree t;
  if (j.contains("dim") && !j["dim"].is_null()) {
    if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) {
      throw InputError("ontology: 'dim' must be a positive integer or null");
    }
    t.dim = j["dim"].get<std::size_t>();
  }
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) throw InputError("ontology: 'metadata' must be an object");
    t.metadata = j["metadata"];
  }
  t.root = detail::node_from_json(j["root"], "root");
  validate(t);
  return t;
}

inline void save_ontology(const OntologyTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write ontology '" + path + "'");
  out << to_json(tree).dump(2) << '\n';
}

inline OntologyTree load_ontology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ontology '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Graphviz

namespace detail {
inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}
}  // namespace detail

inline std::string export_dot(const OntologyTree& tree) {
  std::ostringstream out;
  out << "digraph ontology {\n";
  out << "  rankdir=TB;\n";
  out << "  node [shape=box, style=rounded];\n";
  visit_preorder(tree.root, [&](const OntologyNode& n, std::size_t) {
    out << "  " << detail::dot_quote(n.id) << " [label=" << detail::dot_quote(n.label);
    if (n.is_leaf()) {
      out << ", shape=ellipse, style=filled, fillcolor=lightblue";
    } else if (!n.decoded) {
      out << ", style=\"rounded,dashed\"";
    }
    out << "];\n";
  });
  visit_preorder(tree.root, [&](const OntologyNode& n, std::size_t) {
    for (const auto& c : n.children) {
      out << "  " << detail::dot_quote(n.id) << " -> " << detail::dot_quote(c.id) << ";\n";
    }
  });
  out << "}\n";
  return out.str();
}

}  // namespace ontox
