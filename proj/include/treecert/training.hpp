#pragma once

#include <vector>

#include "treecert/data_io.hpp"
#include "treecert/model.hpp"

namespace treecert {

struct TrainParams {
  int max_depth = 3;
  int min_samples_split = 2;
  // Boosting only.
  int n_rounds = 20;
  double learning_rate = 0.3;
  double l2_reg = 1.0;

  void validate() const;
};

struct Metrics {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;

  /// Class 1 is the positive class; ratios with a zero denominator are 0.
  static Metrics from_confusion(long long tp, long long fp, long long fn,
                                long long tn);
};

/// Greedy Gini-impurity CART. Candidate thresholds are midpoints between
/// consecutive distinct feature values; ties break toward the lowest
/// feature index, then the lowest threshold. A node becomes a leaf when it
/// is pure, reaches max_depth, has fewer than min_samples_split samples, or
/// no split has positive gain. Leaf labels are the majority class, ties
/// going to class 0.
Tree train_cart(const Dataset& train, const TrainParams& params);

/// Second-order boosting of the logistic loss: each round fits a regression
/// tree maximizing the usual gain and sets leaf values to
/// -learning_rate * G / (H + l2_reg). Raw scores threshold at 0.
Ensemble train_boosted(const Dataset& train, const TrainParams& params);

Metrics evaluate(const Tree& tree, const Dataset& test);
Metrics evaluate(const Ensemble& ensemble, const Dataset& test);

struct GridCell {
  TrainParams params;
  Metrics metrics;
};

struct GridResult {
  Tree best_model;
  TrainParams best_params;
  Metrics best_metrics;
  std::vector<GridCell> cells;
};

/// Train one CART per (max_depth, min_samples_split) cell, evaluate on the
/// test set, and keep the highest F1. Exact F1 ties prefer the lower depth,
/// then the smaller min_samples_split.
GridResult grid_search(const Dataset& train, const Dataset& test,
                       const std::vector<int>& depths,
                       const std::vector<int>& min_samples);

/// Wrap a classifier tree as a length-1 ensemble for serialization.
Ensemble as_classifier_ensemble(const Tree& tree, int n_features);

}  // namespace treecert
