#pragma once

#include <string>
#include <vector>

#include "treecert/data_io.hpp"
#include "treecert/model.hpp"

namespace treecert {

struct VerifyParams {
  double eps_init = 0.3;
  int max_search = 10;
  int max_level = 1;
  int max_clique = 2;
  int dp = 0;

  void validate() const;
};

/// Minimum perturbation moving x into the box, one component per dimension:
/// 0 inside the interval, x - hi above it, lo - x at or below the open end.
/// All components are >= 0; the box must be nonempty.
std::vector<double> leaf_perturbation(const Example& x, const Box& box);

/// L-inf norm of leaf_perturbation: the infimum distance from x to the box.
double linf_distance(const Example& x, const Box& box);

/// Exact minimal adversarial perturbation for a single classifier tree:
/// the minimum over leaves with a different label of the box distance.
/// Returns 0 when the tree already disagrees with y0 and +inf when every
/// leaf carries y0.
double verify_tree_exact(const Tree& tree, int n_features, const Example& x,
                         int y0);

struct ReachableLeaf {
  int leaf_id = -1;
  double signed_value = 0.0;
};

/// Leaves whose boxes intersect the closed L-inf ball of radius eps around
/// x. Values are sign-adjusted so that smaller is worse for the true class
/// (negated when y0 = 0).
std::vector<ReachableLeaf> reachable_leaves(const Tree& tree, int n_features,
                                            const Example& x, int y0,
                                            double eps);

/// Clique-merge carrier: a tuple of leaves from distinct trees with
/// pairwise intersecting boxes, collapsed to its summed value and
/// intersected box.
struct PseudoNode {
  double value = 0.0;
  Box box;
  std::vector<std::pair<int, int>> members;  // (tree index, leaf id)
};

/// Precomputed per-tree leaf values and boxes; unreachable leaves (empty
/// boxes) are dropped from verification.
class EnsembleGeometry {
 public:
  explicit EnsembleGeometry(const Ensemble& ensemble);

  struct LeafGeom {
    int leaf_id = -1;
    double value = 0.0;  // additive value, or label for classifier trees
    Box box;
  };

  const Ensemble& ensemble() const { return *ensemble_; }
  const std::vector<std::vector<LeafGeom>>& trees() const { return trees_; }

 private:
  const Ensemble* ensemble_;
  std::vector<std::vector<LeafGeom>> trees_;
};

/// Sound lower bound on the minimum signed margin over the eps-ball
/// (margin = raw score when y0 = 1, its negation otherwise).
///
/// Level 1 collects each tree's reachable leaves as one part. Every level
/// after the first partitions the parts into consecutive groups of
/// max_clique and replaces each group by the pseudo-nodes of its pairwise
/// compatible tuples. Aggregation sums per-part minima (dp = 0) or runs a
/// chain dynamic program over adjacent parts with intersecting boxes
/// (dp = 1). The result never exceeds the true minimum margin.
double ensemble_margin_bound(const Ensemble& ensemble, const Example& x,
                             int y0, double eps, const VerifyParams& params);
double ensemble_margin_bound(const EnsembleGeometry& geometry,
                             const Example& x, int y0, double eps,
                             const VerifyParams& params);

/// Robust iff the margin bound is strictly positive.
bool verify_at(const Ensemble& ensemble, const Example& x, int y0, double eps,
               const VerifyParams& params);
bool verify_at(const EnsembleGeometry& geometry, const Example& x, int y0,
               double eps, const VerifyParams& params);

struct Certificate {
  int index = -1;
  bool correct = false;            // clean prediction matches the label
  double lower_bound = 0.0;        // largest verified radius, 0 if none
  bool verified_at_eps_init = false;
  int searches_used = 0;
};

/// Binary search for the largest certifiable radius, spending at most
/// max_search robustness probes: the first probe is at eps_init, then the
/// radius doubles after successes (halves after failures) until the first
/// sign change, and the bracket is bisected with the remaining budget.
/// Misclassified points short-circuit to a zero bound.
Certificate certify_example(const Ensemble& ensemble, const Example& x,
                            int y0, const VerifyParams& params);
Certificate certify_example(const EnsembleGeometry& geometry, const Example& x,
                            int y0, const VerifyParams& params);

struct Report {
  VerifyParams params;
  std::string model_id;
  std::string data_id;
  int num_points = 0;  // examples actually evaluated
  double average_bound = 0.0;
  double verified_error = 0.0;
  std::vector<Certificate> certificates;
};

/// Certify the first num_points examples in file order. average_bound is
/// the mean certified radius; verified_error is the fraction of points that
/// are misclassified or not verified at eps_init.
Report run_verification(const Ensemble& ensemble, const Dataset& dataset,
                        const VerifyParams& params, int num_points = 1000);

/// Deterministic JSON with sorted keys.
std::string serialize_report(const Report& report);

}  // namespace treecert
