#include "treecert/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "json_util.hpp"

namespace treecert {

using json = nlohmann::json;

const Node& Tree::node(int id) const {
  auto it = nodes.find(id);
  if (it == nodes.end())
    throw StructuralError("node id " + std::to_string(id) + " does not exist");
  return it->second;
}

int Tree::leaf_node_count() const {
  int n = 0;
  for (const auto& [id, node] : nodes)
    if (node.is_leaf()) ++n;
  return n;
}

Box box_intersect(const Box& a, const Box& b) {
  if (a.n_dims() != b.n_dims())
    throw DataError("box dimension mismatch: " + std::to_string(a.n_dims()) +
                    " vs " + std::to_string(b.n_dims()));
  Box out(a.n_dims());
  for (int t = 0; t < a.n_dims(); ++t) {
    out.dim(t).lo = std::max(a.dim(t).lo, b.dim(t).lo);
    out.dim(t).hi = std::min(a.dim(t).hi, b.dim(t).hi);
  }
  return out;
}

int traverse(const Tree& tree, const Example& x) {
  int id = tree.root;
  const Node* n = &tree.node(id);
  while (!n->is_leaf()) {
    id = x.value(n->feature) <= n->threshold ? n->left : n->right;
    n = &tree.node(id);
  }
  return id;
}

Prediction predict(const Ensemble& ensemble, const Example& x) {
  if (ensemble.mode == TreeMode::classifier) {
    if (ensemble.trees.size() != 1)
      throw ModeError("classifier prediction requires a single tree, got " +
                      std::to_string(ensemble.trees.size()));
    const Tree& tree = ensemble.trees.front();
    int label = tree.node(traverse(tree, x)).label;
    return Prediction{label, static_cast<double>(label)};
  }
  double score = ensemble.base_score;
  for (const Tree& tree : ensemble.trees)
    score += tree.node(traverse(tree, x)).value;
  return Prediction{score >= 0.0 ? 1 : 0, score};
}

LeafBoxes compute_leaf_boxes(const Tree& tree, int n_features) {
  LeafBoxes out;
  std::vector<std::pair<int, Box>> stack;
  stack.emplace_back(tree.root, Box(n_features));
  while (!stack.empty()) {
    auto [id, box] = std::move(stack.back());
    stack.pop_back();
    const Node& n = tree.node(id);
    if (n.is_leaf()) {
      if (box.empty()) out.unreachable.push_back(id);
      out.by_leaf.emplace(id, std::move(box));
      continue;
    }
    Box left = box;
    left.dim(n.feature).hi = std::min(left.dim(n.feature).hi, n.threshold);
    Box right = std::move(box);
    right.dim(n.feature).lo = std::max(right.dim(n.feature).lo, n.threshold);
    stack.emplace_back(n.right, std::move(right));
    stack.emplace_back(n.left, std::move(left));
  }
  std::sort(out.unreachable.begin(), out.unreachable.end());
  return out;
}

namespace {

Node parse_node(const json& jn, TreeMode mode, const std::string& where) {
  if (!jn.is_object()) throw ParseError(where + ": node must be an object");
  if (!jn.contains("id") || !jn["id"].is_number_integer())
    throw ParseError(where + ": missing integer 'id'");

  Node node;
  node.id = jn["id"].get<int>();
  const std::set<std::string> keys = [&] {
    std::set<std::string> k;
    for (auto it = jn.begin(); it != jn.end(); ++it) k.insert(it.key());
    return k;
  }();

  static const std::set<std::string> kInternal = {"id", "feature", "threshold",
                                                  "left", "right"};
  static const std::set<std::string> kClassifierLeaf = {"id", "label"};
  static const std::set<std::string> kAdditiveLeaf = {"id", "value"};

  if (keys == kInternal) {
    node.kind = NodeKind::internal;
    if (!jn["feature"].is_number_integer())
      throw ParseError(where + ": 'feature' must be an integer");
    if (!jn["threshold"].is_number())
      throw ParseError(where + ": 'threshold' must be a number");
    if (!jn["left"].is_number_integer() || !jn["right"].is_number_integer())
      throw ParseError(where + ": 'left'/'right' must be integers");
    node.feature = jn["feature"].get<int>();
    node.threshold = jn["threshold"].get<double>();
    node.left = jn["left"].get<int>();
    node.right = jn["right"].get<int>();
    if (node.feature < 0)
      throw StructuralError(where + ": feature index must be >= 0");
    if (node.left == node.right)
      throw StructuralError(where + ": children must be distinct");
    return node;
  }
  if (keys == kClassifierLeaf) {
    if (mode != TreeMode::classifier)
      throw ModeError(where + ": labeled leaf in an additive model");
    if (!jn["label"].is_number_integer())
      throw ParseError(where + ": 'label' must be an integer");
    node.kind = NodeKind::leaf;
    node.label = jn["label"].get<int>();
    return node;
  }
  if (keys == kAdditiveLeaf) {
    if (mode != TreeMode::additive)
      throw ModeError(where + ": valued leaf in a classifier model");
    if (!jn["value"].is_number())
      throw ParseError(where + ": 'value' must be a number");
    node.kind = NodeKind::leaf;
    node.value = jn["value"].get<double>();
    return node;
  }
  throw ParseError(where +
                   ": node fields must be exactly {id,feature,threshold,left,"
                   "right}, {id,label}, or {id,value}");
}

void validate_tree_structure(const Tree& tree, int n_features,
                             const std::string& where) {
  std::unordered_set<int> visited;
  std::vector<int> stack{tree.root};
  if (!tree.nodes.contains(tree.root))
    throw StructuralError(where + ": root id " + std::to_string(tree.root) +
                          " does not exist");
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (!visited.insert(id).second)
      throw StructuralError(where + ": node " + std::to_string(id) +
                            " is referenced more than once");
    auto it = tree.nodes.find(id);
    if (it == tree.nodes.end())
      throw StructuralError(where + ": dangling child id " +
                            std::to_string(id));
    const Node& n = it->second;
    if (!n.is_leaf()) {
      if (n.feature >= n_features)
        throw StructuralError(where + ": feature index " +
                              std::to_string(n.feature) +
                              " exceeds n_features");
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  if (visited.size() != tree.nodes.size())
    throw StructuralError(where + ": " +
                          std::to_string(tree.nodes.size() - visited.size()) +
                          " node(s) unreachable from root");
}

}  // namespace

Ensemble load_ensemble(const std::string& document) {
  json doc = parse_json_strict(document);
  if (!doc.is_object()) throw ParseError("model document must be an object");
  reject_unknown_keys(doc, {"mode", "n_features", "base_score", "trees"},
                      "model");

  Ensemble ensemble;
  if (!doc.contains("mode") || !doc["mode"].is_string())
    throw ParseError("model: missing string 'mode'");
  const std::string mode = doc["mode"].get<std::string>();
  if (mode == "classifier")
    ensemble.mode = TreeMode::classifier;
  else if (mode == "additive")
    ensemble.mode = TreeMode::additive;
  else
    throw ParseError("model: 'mode' must be \"classifier\" or \"additive\"");

  if (!doc.contains("n_features") || !doc["n_features"].is_number_integer())
    throw ParseError("model: missing integer 'n_features'");
  ensemble.n_features = doc["n_features"].get<int>();
  if (ensemble.n_features < 1)
    throw ParseError("model: 'n_features' must be >= 1");

  if (doc.contains("base_score")) {
    if (!doc["base_score"].is_number())
      throw ParseError("model: 'base_score' must be a number");
    ensemble.base_score = doc["base_score"].get<double>();
  }

  if (!doc.contains("trees") || !doc["trees"].is_array() ||
      doc["trees"].empty())
    throw ParseError("model: 'trees' must be a nonempty array");

  for (size_t i = 0; i < doc["trees"].size(); ++i) {
    const std::string where = "trees[" + std::to_string(i) + "]";
    const json& jt = doc["trees"][i];
    if (!jt.is_object()) throw ParseError(where + ": tree must be an object");
    reject_unknown_keys(jt, {"nodes", "root"}, where);
    if (!jt.contains("root") || !jt["root"].is_number_integer())
      throw ParseError(where + ": missing integer 'root'");
    if (!jt.contains("nodes") || !jt["nodes"].is_array() || jt["nodes"].empty())
      throw ParseError(where + ": 'nodes' must be a nonempty array");

    Tree tree;
    tree.mode = ensemble.mode;
    tree.root = jt["root"].get<int>();
    for (size_t k = 0; k < jt["nodes"].size(); ++k) {
      Node node = parse_node(jt["nodes"][k], ensemble.mode,
                             where + ".nodes[" + std::to_string(k) + "]");
      if (!tree.nodes.emplace(node.id, node).second)
        throw StructuralError(where + ": duplicate node id " +
                              std::to_string(node.id));
    }
    validate_tree_structure(tree, ensemble.n_features, where);
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

std::string dump_ensemble(const Ensemble& ensemble) {
  json doc;
  doc["mode"] =
      ensemble.mode == TreeMode::classifier ? "classifier" : "additive";
  doc["n_features"] = ensemble.n_features;
  doc["base_score"] = ensemble.base_score;
  doc["trees"] = json::array();
  for (const Tree& tree : ensemble.trees) {
    json jt;
    jt["root"] = tree.root;
    jt["nodes"] = json::array();
    for (const auto& [id, node] : tree.nodes) {
      json jn;
      jn["id"] = id;
      if (node.is_leaf()) {
        if (ensemble.mode == TreeMode::classifier)
          jn["label"] = node.label;
        else
          jn["value"] = node.value;
      } else {
        jn["feature"] = node.feature;
        jn["threshold"] = node.threshold;
        jn["left"] = node.left;
        jn["right"] = node.right;
      }
      jt["nodes"].push_back(std::move(jn));
    }
    doc["trees"].push_back(std::move(jt));
  }
  return doc.dump(2) + "\n";
}

}  // namespace treecert
