#pragma once

#include <cstdint>

#include "treecert/model.hpp"

namespace treecert {

/// Exhaustive-enumeration oracles for small models. These walk every
/// cross-tree leaf tuple with pairwise intersecting boxes directly and stay
/// independent of the clique-merge machinery, so they can check it.
///
/// Both refuse models whose product of per-tree leaf counts exceeds
/// max_tuples.

/// Exact minimal adversarial perturbation: the smallest box distance over
/// misclassifying tuples (+inf when the prediction cannot change). Supports
/// additive ensembles and single classifier trees.
double brute_force_rstar(const Ensemble& ensemble, const Example& x, int y0,
                         std::uint64_t max_tuples = 1'000'000);

/// Exact minimum signed margin over the closed eps-ball around x
/// (margin = raw score when y0 = 1, its negation otherwise), taking the
/// minimum over every feasible tuple whose joint box lies within distance
/// eps. Additive ensembles only.
double brute_force_min_margin(const Ensemble& ensemble, const Example& x,
                              int y0, double eps,
                              std::uint64_t max_tuples = 1'000'000);

}  // namespace treecert
