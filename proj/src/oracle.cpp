#include "treecert/oracle.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace treecert {

namespace {

struct LeafRef {
  double value = 0.0;  // additive value, or label for classifier trees
  Box box;
};

std::vector<std::vector<LeafRef>> all_leaves(const Ensemble& ensemble,
                                             std::uint64_t max_tuples) {
  std::vector<std::vector<LeafRef>> trees;
  std::uint64_t product = 1;
  for (const Tree& tree : ensemble.trees) {
    const LeafBoxes boxes = compute_leaf_boxes(tree, ensemble.n_features);
    std::vector<LeafRef> leaves;
    for (const auto& [leaf_id, box] : boxes.by_leaf) {
      if (box.empty()) continue;
      const Node& n = tree.node(leaf_id);
      leaves.push_back({ensemble.mode == TreeMode::additive
                            ? n.value
                            : static_cast<double>(n.label),
                        box});
    }
    product *= static_cast<std::uint64_t>(leaves.size());
    if (product > max_tuples)
      throw DataError("tuple enumeration exceeds the configured cap");
    trees.push_back(std::move(leaves));
  }
  return trees;
}

}  // namespace

double brute_force_rstar(const Ensemble& ensemble, const Example& x, int y0,
                         std::uint64_t max_tuples) {
  if (ensemble.mode == TreeMode::classifier) {
    if (ensemble.trees.size() != 1)
      throw ModeError("classifier oracle requires a single tree");
    const Tree& tree = ensemble.trees.front();
    const LeafBoxes boxes = compute_leaf_boxes(tree, ensemble.n_features);
    double best = kInf;
    for (const auto& [leaf_id, box] : boxes.by_leaf) {
      if (box.empty()) continue;
      if (tree.node(leaf_id).label == y0) continue;
      double dist = 0.0;
      for (int t = 0; t < box.n_dims(); ++t) {
        const Interval& iv = box.dim(t);
        const double v = x.value(t);
        if (iv.contains(v)) continue;
        dist = std::max(dist, v > iv.hi ? v - iv.hi : iv.lo - v);
      }
      best = std::min(best, dist);
    }
    return best;
  }

  const auto trees = all_leaves(ensemble, max_tuples);
  double best = kInf;
  std::function<void(size_t, Box, double, double)> descend =
      [&](size_t i, Box acc, double dist, double score) {
        if (dist >= best) return;
        if (i == trees.size()) {
          const int label = score >= 0.0 ? 1 : 0;
          if (label != y0) best = std::min(best, dist);
          return;
        }
        for (const LeafRef& leaf : trees[i]) {
          Box merged = box_intersect(acc, leaf.box);
          if (merged.empty()) continue;
          double d = dist;
          for (int t = 0; t < merged.n_dims(); ++t) {
            const Interval& iv = merged.dim(t);
            const double v = x.value(t);
            if (iv.contains(v)) continue;
            d = std::max(d, v > iv.hi ? v - iv.hi : iv.lo - v);
          }
          descend(i + 1, std::move(merged), d, score + leaf.value);
        }
      };
  descend(0, Box(ensemble.n_features), 0.0, ensemble.base_score);
  return best;
}

double brute_force_min_margin(const Ensemble& ensemble, const Example& x,
                              int y0, double eps, std::uint64_t max_tuples) {
  if (ensemble.mode != TreeMode::additive)
    throw ModeError("margin oracle requires an additive ensemble");
  const double sign = y0 == 1 ? 1.0 : -1.0;
  const auto trees = all_leaves(ensemble, max_tuples);
  double best = kInf;
  std::function<void(size_t, Box, double)> descend = [&](size_t i, Box acc,
                                                         double score) {
    double dist = 0.0;
    for (int t = 0; t < acc.n_dims(); ++t) {
      const Interval& iv = acc.dim(t);
      const double v = x.value(t);
      if (iv.contains(v)) continue;
      dist = std::max(dist, v > iv.hi ? v - iv.hi : iv.lo - v);
    }
    if (dist > eps) return;
    if (i == trees.size()) {
      best = std::min(best, sign * score);
      return;
    }
    for (const LeafRef& leaf : trees[i]) {
      Box merged = box_intersect(acc, leaf.box);
      if (merged.empty()) continue;
      descend(i + 1, std::move(merged), score + leaf.value);
    }
  };
  descend(0, Box(ensemble.n_features), ensemble.base_score);
  if (!(best < kInf))
    throw InternalError("margin enumeration found no feasible tuple");
  return best;
}

}  // namespace treecert
