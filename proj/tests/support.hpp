#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "treecert/model.hpp"

namespace treecert::test {

inline std::string source_dir() { return TREECERT_SOURCE_DIR; }
inline std::string data_path(const std::string& rel) {
  return source_dir() + "/data/" + rel;
}
inline std::string fixture_path(const std::string& rel) {
  return source_dir() + "/tests/fixtures/" + rel;
}
inline std::string cli_path() { return TREECERT_CLI_PATH; }

// Uniform double in [0, 1) with an engine-pinned bit pattern.
inline double uniform01(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

inline Example make_example(std::vector<double> coords, int label = 0) {
  Example ex;
  ex.label = label;
  for (size_t i = 0; i < coords.size(); ++i)
    if (coords[i] != 0.0) ex.features[static_cast<int>(i)] = coords[i];
  return ex;
}

struct TreeBuilder {
  Tree tree;
  int next_id = 0;

  explicit TreeBuilder(TreeMode mode) { tree.mode = mode; }

  int internal(int feature, double threshold) {
    Node n;
    n.id = next_id++;
    n.kind = NodeKind::internal;
    n.feature = feature;
    n.threshold = threshold;
    tree.nodes.emplace(n.id, n);
    return n.id;
  }
  int leaf_label(int label) {
    Node n;
    n.id = next_id++;
    n.label = label;
    tree.nodes.emplace(n.id, n);
    return n.id;
  }
  int leaf_value(double value) {
    Node n;
    n.id = next_id++;
    n.value = value;
    tree.nodes.emplace(n.id, n);
    return n.id;
  }
  void children(int id, int left, int right) {
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
  }
  Tree take() {
    tree.root = 0;
    return std::move(tree);
  }
};

// Root f0@0.5; left child splits f1@0.3 into labels 0|1; right leaf 1.
// Node ids: 0 root, 1 left split, 2 = L1 (label 0), 3 = L2 (label 1),
// 4 = L3 (label 1).
inline Tree depth2_tree() {
  TreeBuilder b(TreeMode::classifier);
  const int root = b.internal(0, 0.5);
  const int split = b.internal(1, 0.3);
  const int l1 = b.leaf_label(0);
  const int l2 = b.leaf_label(1);
  const int l3 = b.leaf_label(1);
  b.children(split, l1, l2);
  b.children(root, split, l3);
  return b.take();
}

inline Tree additive_stump(int feature, double threshold, double left,
                           double right) {
  TreeBuilder b(TreeMode::additive);
  const int root = b.internal(feature, threshold);
  const int left_id = b.leaf_value(left);
  const int right_id = b.leaf_value(right);
  b.children(root, left_id, right_id);
  return b.take();
}

inline Ensemble depth2_tree_ensemble() {
  Ensemble e;
  e.mode = TreeMode::classifier;
  e.n_features = 2;
  e.trees.push_back(depth2_tree());
  return e;
}

// Two stumps over one feature: f0@0.5 -> -0.5|+1.0 and f0@0.7 -> -0.3|+0.8.
inline Ensemble stump_pair() {
  Ensemble e;
  e.mode = TreeMode::additive;
  e.n_features = 1;
  e.trees.push_back(additive_stump(0, 0.5, -0.5, 1.0));
  e.trees.push_back(additive_stump(0, 0.7, -0.3, 0.8));
  return e;
}

// Three +-1 stumps ordered so the first two split the same feature with
// opposite leaf signs; the chain aggregation sees them as adjacent.
inline Ensemble three_stumps() {
  Ensemble e;
  e.mode = TreeMode::additive;
  e.n_features = 2;
  e.trees.push_back(additive_stump(0, 0.5, -1.0, 1.0));
  e.trees.push_back(additive_stump(0, 0.5, 1.0, -1.0));
  e.trees.push_back(additive_stump(1, 0.5, -1.0, 1.0));
  return e;
}

// Random tree over [0,1]^d whose thresholds stay strictly inside the live
// cell, so every leaf is reachable.
inline int grow_random_tree(TreeBuilder& b, std::mt19937_64& rng, int d,
                            int depth, int max_depth,
                            std::vector<std::pair<double, double>>& cell,
                            bool classifier) {
  const bool make_leaf =
      depth >= max_depth || (depth > 0 && rng() % 100 < 30);
  if (make_leaf) {
    if (classifier) return b.leaf_label(static_cast<int>(rng() % 2));
    return b.leaf_value(2.0 * uniform01(rng) - 1.0);
  }
  const int f = static_cast<int>(rng() % static_cast<unsigned>(d));
  auto [lo, hi] = cell[static_cast<size_t>(f)];
  const double thr = lo + (0.1 + 0.8 * uniform01(rng)) * (hi - lo);
  const int id = b.internal(f, thr);

  const double saved_hi = cell[static_cast<size_t>(f)].second;
  cell[static_cast<size_t>(f)].second = thr;
  const int left = grow_random_tree(b, rng, d, depth + 1, max_depth, cell,
                                    classifier);
  cell[static_cast<size_t>(f)].second = saved_hi;

  const double saved_lo = cell[static_cast<size_t>(f)].first;
  cell[static_cast<size_t>(f)].first = thr;
  const int right = grow_random_tree(b, rng, d, depth + 1, max_depth, cell,
                                     classifier);
  cell[static_cast<size_t>(f)].first = saved_lo;

  b.children(id, left, right);
  return id;
}

inline Tree random_classifier_tree(std::mt19937_64& rng, int d,
                                   int max_depth) {
  TreeBuilder b(TreeMode::classifier);
  std::vector<std::pair<double, double>> cell(static_cast<size_t>(d),
                                              {0.0, 1.0});
  grow_random_tree(b, rng, d, 0, max_depth, cell, /*classifier=*/true);
  return b.take();
}

inline Ensemble random_additive_ensemble(std::mt19937_64& rng, int max_trees,
                                         int d, int max_depth) {
  Ensemble e;
  e.mode = TreeMode::additive;
  e.n_features = d;
  e.base_score = (rng() % 4 == 0) ? 0.4 * uniform01(rng) - 0.2 : 0.0;
  const int n_trees = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_trees));
  for (int t = 0; t < n_trees; ++t) {
    TreeBuilder b(TreeMode::additive);
    std::vector<std::pair<double, double>> cell(static_cast<size_t>(d),
                                                {0.0, 1.0});
    grow_random_tree(b, rng, d, 0, max_depth, cell, /*classifier=*/false);
    e.trees.push_back(b.take());
  }
  return e;
}

inline Example random_point(std::mt19937_64& rng, int d) {
  std::vector<double> coords(static_cast<size_t>(d));
  for (double& c : coords) c = uniform01(rng);
  return make_example(coords);
}

}  // namespace treecert::test
