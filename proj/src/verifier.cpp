#include "treecert/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json_util.hpp"

namespace treecert {

void VerifyParams::validate() const {
  if (!(eps_init > 0.0)) throw ConfigError("eps_init must be > 0");
  if (max_search < 1) throw ConfigError("max_search must be >= 1");
  if (max_level < 1) throw ConfigError("max_level must be >= 1");
  if (max_clique < 2) throw ConfigError("max_clique must be >= 2");
  if (dp != 0 && dp != 1) throw ConfigError("dp must be 0 or 1");
}

std::vector<double> leaf_perturbation(const Example& x, const Box& box) {
  if (box.empty())
    throw DataError("leaf_perturbation on an empty box");
  std::vector<double> eps(static_cast<size_t>(box.n_dims()), 0.0);
  for (int t = 0; t < box.n_dims(); ++t) {
    const Interval& iv = box.dim(t);
    const double v = x.value(t);
    if (iv.contains(v)) continue;
    eps[static_cast<size_t>(t)] = v > iv.hi ? v - iv.hi : iv.lo - v;
  }
  return eps;
}

double linf_distance(const Example& x, const Box& box) {
  double worst = 0.0;
  for (int t = 0; t < box.n_dims(); ++t) {
    const Interval& iv = box.dim(t);
    const double v = x.value(t);
    if (iv.contains(v)) continue;
    worst = std::max(worst, v > iv.hi ? v - iv.hi : iv.lo - v);
  }
  return worst;
}

double verify_tree_exact(const Tree& tree, int n_features, const Example& x,
                         int y0) {
  if (tree.mode != TreeMode::classifier)
    throw ModeError("verify_tree_exact requires a classifier tree");
  if (tree.node(traverse(tree, x)).label != y0) return 0.0;

  const LeafBoxes boxes = compute_leaf_boxes(tree, n_features);
  double best = kInf;
  for (const auto& [leaf_id, box] : boxes.by_leaf) {
    if (box.empty()) continue;
    if (tree.node(leaf_id).label == y0) continue;
    best = std::min(best, linf_distance(x, box));
  }
  return best;
}

std::vector<ReachableLeaf> reachable_leaves(const Tree& tree, int n_features,
                                            const Example& x, int y0,
                                            double eps) {
  if (tree.mode != TreeMode::additive)
    throw ModeError("reachable_leaves requires an additive tree");
  const double sign = y0 == 1 ? 1.0 : -1.0;
  const LeafBoxes boxes = compute_leaf_boxes(tree, n_features);
  std::vector<ReachableLeaf> out;
  for (const auto& [leaf_id, box] : boxes.by_leaf) {
    if (box.empty()) continue;
    if (linf_distance(x, box) <= eps)
      out.push_back({leaf_id, sign * tree.node(leaf_id).value});
  }
  return out;
}

EnsembleGeometry::EnsembleGeometry(const Ensemble& ensemble)
    : ensemble_(&ensemble) {
  trees_.reserve(ensemble.trees.size());
  for (const Tree& tree : ensemble.trees) {
    const LeafBoxes boxes = compute_leaf_boxes(tree, ensemble.n_features);
    std::vector<LeafGeom> leaves;
    for (const auto& [leaf_id, box] : boxes.by_leaf) {
      if (box.empty()) continue;
      const Node& n = tree.node(leaf_id);
      leaves.push_back({leaf_id,
                        ensemble.mode == TreeMode::additive
                            ? n.value
                            : static_cast<double>(n.label),
                        box});
    }
    trees_.push_back(std::move(leaves));
  }
}

namespace {

using Part = std::vector<PseudoNode>;

std::vector<Part> collect_level_one(const EnsembleGeometry& geometry,
                                    const Example& x, int y0, double eps) {
  const double sign = y0 == 1 ? 1.0 : -1.0;
  std::vector<Part> parts;
  parts.reserve(geometry.trees().size());
  for (size_t t = 0; t < geometry.trees().size(); ++t) {
    Part part;
    for (const auto& leaf : geometry.trees()[t]) {
      if (linf_distance(x, leaf.box) > eps) continue;
      part.push_back({sign * leaf.value, leaf.box, {{static_cast<int>(t), leaf.leaf_id}}});
    }
    if (part.empty())
      throw InternalError("tree " + std::to_string(t) +
                          " has no reachable leaf; the traversed leaf always is");
    parts.push_back(std::move(part));
  }
  return parts;
}

/// Enumerate one node per part in [begin, end), keeping tuples whose boxes
/// stay pairwise compatible and within the eps ball. Depth-first with
/// incremental intersection; the first empty or too-distant intersection
/// prunes the subtree.
void merge_group(const std::vector<Part>& parts, size_t begin, size_t end,
                 const Example& x, double eps, Part& out) {
  std::function<void(size_t, PseudoNode)> descend = [&](size_t i,
                                                        PseudoNode acc) {
    if (i == end) {
      out.push_back(std::move(acc));
      return;
    }
    for (const PseudoNode& node : parts[i]) {
      Box merged = box_intersect(acc.box, node.box);
      if (merged.empty()) continue;
      if (linf_distance(x, merged) > eps) continue;
      PseudoNode next;
      next.value = acc.value + node.value;
      next.box = std::move(merged);
      next.members = acc.members;
      next.members.insert(next.members.end(), node.members.begin(),
                          node.members.end());
      descend(i + 1, std::move(next));
    }
  };
  for (const PseudoNode& seed : parts[begin]) descend(begin + 1, seed);
}

double aggregate_sum_of_minima(const std::vector<Part>& parts) {
  double total = 0.0;
  for (const Part& part : parts) {
    double best = kInf;
    for (const PseudoNode& node : part) best = std::min(best, node.value);
    total += best;
  }
  return total;
}

/// Chain dynamic program over parts in order: a node extends the best
/// predecessor whose box intersects its own.
double aggregate_chain_dp(const std::vector<Part>& parts) {
  std::vector<double> prev;
  for (const PseudoNode& node : parts.front()) prev.push_back(node.value);
  for (size_t i = 1; i < parts.size(); ++i) {
    std::vector<double> cur(parts[i].size(), kInf);
    for (size_t j = 0; j < parts[i].size(); ++j) {
      double best = kInf;
      for (size_t k = 0; k < parts[i - 1].size(); ++k) {
        if (prev[k] >= best) continue;
        if (box_intersect(parts[i - 1][k].box, parts[i][j].box).empty())
          continue;
        best = prev[k];
      }
      if (best < kInf) cur[j] = best + parts[i][j].value;
    }
    prev = std::move(cur);
  }
  double answer = kInf;
  for (double v : prev) answer = std::min(answer, v);
  if (!(answer < kInf))
    throw InternalError("chain aggregation found no feasible path");
  return answer;
}

}  // namespace

double ensemble_margin_bound(const EnsembleGeometry& geometry,
                             const Example& x, int y0, double eps,
                             const VerifyParams& params) {
  params.validate();
  if (geometry.ensemble().mode != TreeMode::additive)
    throw ModeError("margin bounds require an additive ensemble");
  if (eps < 0.0) throw DataError("eps must be >= 0");

  std::vector<Part> parts = collect_level_one(geometry, x, y0, eps);
  for (int level = 2; level <= params.max_level && parts.size() > 1; ++level) {
    std::vector<Part> merged;
    const size_t step = static_cast<size_t>(params.max_clique);
    for (size_t begin = 0; begin < parts.size(); begin += step) {
      const size_t end = std::min(parts.size(), begin + step);
      Part group;
      merge_group(parts, begin, end, x, eps, group);
      if (group.empty())
        throw InternalError("clique merge produced an empty part");
      merged.push_back(std::move(group));
    }
    parts = std::move(merged);
  }

  const double sign = y0 == 1 ? 1.0 : -1.0;
  const double base = sign * geometry.ensemble().base_score;
  return base + (params.dp == 1 ? aggregate_chain_dp(parts)
                                : aggregate_sum_of_minima(parts));
}

double ensemble_margin_bound(const Ensemble& ensemble, const Example& x,
                             int y0, double eps, const VerifyParams& params) {
  return ensemble_margin_bound(EnsembleGeometry(ensemble), x, y0, eps, params);
}

bool verify_at(const EnsembleGeometry& geometry, const Example& x, int y0,
               double eps, const VerifyParams& params) {
  return ensemble_margin_bound(geometry, x, y0, eps, params) > 0.0;
}

bool verify_at(const Ensemble& ensemble, const Example& x, int y0, double eps,
               const VerifyParams& params) {
  return verify_at(EnsembleGeometry(ensemble), x, y0, eps, params);
}

namespace {

/// Exact robustness probe for a lone classifier tree: robust at eps iff the
/// nearest differently-labeled leaf lies strictly beyond eps.
double classifier_rstar(const EnsembleGeometry& geometry, const Example& x,
                        int y0) {
  const auto& leaves = geometry.trees().front();
  const Tree& tree = geometry.ensemble().trees.front();
  double best = kInf;
  for (const auto& leaf : leaves) {
    if (tree.node(leaf.leaf_id).label == y0) continue;
    best = std::min(best, linf_distance(x, leaf.box));
  }
  return best;
}

}  // namespace

Certificate certify_example(const EnsembleGeometry& geometry, const Example& x,
                            int y0, const VerifyParams& params) {
  params.validate();
  Certificate cert;
  cert.correct = predict(geometry.ensemble(), x).label == y0;
  if (!cert.correct) return cert;

  std::function<bool(double)> robust_at;
  if (geometry.ensemble().mode == TreeMode::classifier) {
    const double rstar = classifier_rstar(geometry, x, y0);
    robust_at = [rstar](double eps) { return rstar > eps; };
  } else {
    robust_at = [&](double eps) {
      return ensemble_margin_bound(geometry, x, y0, eps, params) > 0.0;
    };
  }

  double eps = params.eps_init;
  double largest_ok = 0.0;
  double smallest_fail = kInf;
  bool any_ok = false, any_fail = false;
  for (int step = 0; step < params.max_search; ++step) {
    const bool ok = robust_at(eps);
    ++cert.searches_used;
    if (step == 0) cert.verified_at_eps_init = ok;
    if (ok) {
      any_ok = true;
      largest_ok = std::max(largest_ok, eps);
    } else {
      any_fail = true;
      smallest_fail = std::min(smallest_fail, eps);
    }
    if (!any_ok)
      eps *= 0.5;
    else if (!any_fail)
      eps *= 2.0;
    else
      eps = 0.5 * (largest_ok + smallest_fail);
  }
  cert.lower_bound = any_ok ? largest_ok : 0.0;
  return cert;
}

Certificate certify_example(const Ensemble& ensemble, const Example& x, int y0,
                            const VerifyParams& params) {
  return certify_example(EnsembleGeometry(ensemble), x, y0, params);
}

Report run_verification(const Ensemble& ensemble, const Dataset& dataset,
                        const VerifyParams& params, int num_points) {
  params.validate();
  if (dataset.examples.empty()) throw DataError("dataset is empty");
  if (num_points < 1) throw ConfigError("num_points must be >= 1");

  const int n = std::min<int>(num_points,
                              static_cast<int>(dataset.examples.size()));
  const EnsembleGeometry geometry(ensemble);

  Report report;
  report.params = params;
  report.num_points = n;
  report.certificates.reserve(static_cast<size_t>(n));

  double bound_sum = 0.0;
  int not_verified = 0;
  for (int i = 0; i < n; ++i) {
    const Example& ex = dataset.examples[static_cast<size_t>(i)];
    Certificate cert = certify_example(geometry, ex, ex.label, params);
    cert.index = i;
    bound_sum += cert.lower_bound;
    if (!cert.correct || !cert.verified_at_eps_init) ++not_verified;
    report.certificates.push_back(cert);
  }
  report.average_bound = bound_sum / static_cast<double>(n);
  report.verified_error =
      static_cast<double>(not_verified) / static_cast<double>(n);
  return report;
}

std::string serialize_report(const Report& report) {
  using json = nlohmann::json;
  json doc;
  doc["params"] = {{"eps_init", report.params.eps_init},
                   {"max_search", report.params.max_search},
                   {"max_level", report.params.max_level},
                   {"max_clique", report.params.max_clique},
                   {"dp", report.params.dp}};
  doc["model"] = report.model_id;
  doc["data"] = report.data_id;
  doc["num_points"] = report.num_points;
  doc["average_bound"] = report.average_bound;
  doc["verified_error"] = report.verified_error;
  doc["certificates"] = json::array();
  for (const Certificate& cert : report.certificates) {
    doc["certificates"].push_back({{"index", cert.index},
                                   {"correct", cert.correct},
                                   {"lower_bound", cert.lower_bound},
                                   {"verified_at_eps_init",
                                    cert.verified_at_eps_init}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace treecert
