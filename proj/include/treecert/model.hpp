#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "treecert/errors.hpp"

namespace treecert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse feature vector with a class label. Absent indices read as 0.
struct Example {
  std::map<int, double> features;
  int label = 0;

  double value(int feature) const {
    auto it = features.find(feature);
    return it == features.end() ? 0.0 : it->second;
  }

  bool operator==(const Example&) const = default;
};

enum class NodeKind { internal, leaf };
enum class TreeMode { classifier, additive };

struct Node {
  int id = -1;
  NodeKind kind = NodeKind::leaf;
  // Internal nodes: x[feature] <= threshold descends left, otherwise right.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaves: label in classifier trees, additive value otherwise.
  int label = 0;
  double value = 0.0;

  bool is_leaf() const { return kind == NodeKind::leaf; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::map<int, Node> nodes;
  int root = -1;
  TreeMode mode = TreeMode::classifier;

  const Node& node(int id) const;
  int leaf_node_count() const;

  bool operator==(const Tree&) const = default;
};

/// Ordered list of trees over a shared feature space. A lone classifier
/// tree travels as a length-1 ensemble in classifier mode; additive
/// ensembles sum leaf values on top of base_score and predict class 1
/// whenever the raw score is >= 0.
struct Ensemble {
  TreeMode mode = TreeMode::additive;
  int n_features = 0;
  double base_score = 0.0;
  std::vector<Tree> trees;

  bool operator==(const Ensemble&) const = default;
};

/// Half-open interval (lo, hi]; lo may be -inf and hi +inf.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return lo < x && x <= hi; }
  bool empty() const { return !(lo < hi); }
  bool operator==(const Interval&) const = default;
};

/// Axis-aligned product of half-open intervals, one per feature dimension.
/// May be empty (some interval with lo >= hi); empty boxes mark leaves that
/// no input can reach.
class Box {
 public:
  Box() = default;
  explicit Box(int n_dims) : dims_(static_cast<size_t>(n_dims)) {}

  int n_dims() const { return static_cast<int>(dims_.size()); }
  Interval& dim(int t) { return dims_[static_cast<size_t>(t)]; }
  const Interval& dim(int t) const { return dims_[static_cast<size_t>(t)]; }

  bool empty() const {
    for (const Interval& iv : dims_)
      if (iv.empty()) return true;
    return false;
  }

  bool contains(const Example& x) const {
    for (int t = 0; t < n_dims(); ++t)
      if (!dim(t).contains(x.value(t))) return false;
    return true;
  }

  bool contains(std::span<const double> x) const {
    for (int t = 0; t < n_dims(); ++t)
      if (!dim(t).contains(x[static_cast<size_t>(t)])) return false;
    return true;
  }

  bool operator==(const Box&) const = default;

 private:
  std::vector<Interval> dims_;
};

/// Per-dimension (max(lo), min(hi)]; the result is empty iff the boxes are
/// disjoint. Throws DataError on dimension mismatch.
Box box_intersect(const Box& a, const Box& b);

/// Walk from the root to the unique leaf whose box contains x. Returns the
/// leaf's node id.
int traverse(const Tree& tree, const Example& x);

struct Prediction {
  int label = 0;
  double score = 0.0;
};

/// Classifier mode: label of the traversed leaf (single tree only).
/// Additive mode: score = base_score + sum of per-tree leaf values,
/// label = 1 iff score >= 0.
Prediction predict(const Ensemble& ensemble, const Example& x);

struct LeafBoxes {
  std::map<int, Box> by_leaf;
  std::vector<int> unreachable;  // leaves whose box came out empty
};

/// Root box is (-inf, inf]^d; each split clips the child interval on the
/// split dimension (left: hi = min(hi, threshold); right: lo = max(lo,
/// threshold)). Every leaf receives a box; unreachable leaves get an empty
/// box and a warning entry.
LeafBoxes compute_leaf_boxes(const Tree& tree, int n_features);

/// Parse and validate a model document. Unknown fields, dangling child ids,
/// cycles, and leaf kinds inconsistent with the declared mode are rejected.
Ensemble load_ensemble(const std::string& document);

/// Inverse of load_ensemble: deterministic text with sorted keys and node
/// lists ordered by id. load_ensemble(dump_ensemble(e)) == e.
std::string dump_ensemble(const Ensemble& ensemble);

}  // namespace treecert
