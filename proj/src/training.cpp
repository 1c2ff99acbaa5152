#include "treecert/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treecert {

void TrainParams::validate() const {
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("learning_rate must lie in (0, 1]");
  if (l2_reg < 0.0) throw ConfigError("l2_reg must be >= 0");
}

Metrics Metrics::from_confusion(long long tp, long long fp, long long fn,
                                long long tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const long long total = tp + fp + fn + tn;
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

namespace {

struct DenseData {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int d = 0;
};

DenseData densify(const Dataset& ds, bool require_binary) {
  if (ds.examples.empty()) throw DataError("training set is empty");
  DenseData data;
  data.d = ds.n_features;
  data.rows.reserve(ds.examples.size());
  data.labels.reserve(ds.examples.size());
  for (const Example& ex : ds.examples) {
    if (require_binary && ex.label != 0 && ex.label != 1)
      throw DataError("binary labels required, got " +
                      std::to_string(ex.label));
    std::vector<double> row(static_cast<size_t>(data.d), 0.0);
    for (const auto& [f, v] : ex.features) {
      if (f < 0 || f >= data.d)
        throw DataError("feature index " + std::to_string(f) +
                        " outside dataset dimension");
      row[static_cast<size_t>(f)] = v;
    }
    data.rows.push_back(std::move(row));
    data.labels.push_back(ex.label);
  }
  return data;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  bool found = false;
};

double gini(long long c0, long long c1) {
  const double n = static_cast<double>(c0 + c1);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(c0) / n;
  const double p1 = static_cast<double>(c1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

/// Best Gini split over midpoints of consecutive distinct values. Strict
/// improvement keeps the first maximum, which realizes the lowest-feature /
/// lowest-threshold tie-break.
SplitChoice best_gini_split(const DenseData& data,
                            const std::vector<size_t>& idx) {
  long long total0 = 0, total1 = 0;
  for (size_t i : idx) (data.labels[i] == 1 ? total1 : total0)++;
  const double parent = gini(total0, total1);
  const double n = static_cast<double>(idx.size());

  SplitChoice best;
  std::vector<std::pair<double, int>> values(idx.size());
  for (int f = 0; f < data.d; ++f) {
    for (size_t k = 0; k < idx.size(); ++k)
      values[k] = {data.rows[idx[k]][static_cast<size_t>(f)],
                   data.labels[idx[k]]};
    std::sort(values.begin(), values.end());

    long long left0 = 0, left1 = 0;
    for (size_t k = 0; k + 1 < values.size(); ++k) {
      (values[k].second == 1 ? left1 : left0)++;
      if (values[k].first == values[k + 1].first) continue;
      const double threshold =
          values[k].first + 0.5 * (values[k + 1].first - values[k].first);
      const long long right0 = total0 - left0;
      const long long right1 = total1 - left1;
      const double nl = static_cast<double>(left0 + left1);
      const double nr = n - nl;
      const double gain = parent - (nl / n) * gini(left0, left1) -
                          (nr / n) * gini(right0, right1);
      if (!best.found || gain > best.gain) {
        best = {f, threshold, gain, true};
      }
    }
  }
  return best;
}

class TreeBuilder {
 public:
  explicit TreeBuilder(TreeMode mode) { tree_.mode = mode; }

  int add_internal(int feature, double threshold) {
    Node n;
    n.id = next_id_++;
    n.kind = NodeKind::internal;
    n.feature = feature;
    n.threshold = threshold;
    tree_.nodes.emplace(n.id, n);
    return n.id;
  }

  int add_leaf_label(int label) {
    Node n;
    n.id = next_id_++;
    n.label = label;
    tree_.nodes.emplace(n.id, n);
    return n.id;
  }

  int add_leaf_value(double value) {
    Node n;
    n.id = next_id_++;
    n.value = value;
    tree_.nodes.emplace(n.id, n);
    return n.id;
  }

  void set_children(int id, int left, int right) {
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
  }

  Tree take() {
    tree_.root = 0;
    return std::move(tree_);
  }

 private:
  Tree tree_;
  int next_id_ = 0;
};

int grow_cart(const DenseData& data, const std::vector<size_t>& idx, int depth,
              const TrainParams& params, TreeBuilder& builder) {
  long long c0 = 0, c1 = 0;
  for (size_t i : idx) (data.labels[i] == 1 ? c1 : c0)++;
  const int majority = c1 > c0 ? 1 : 0;  // tie -> class 0

  const bool pure = c0 == 0 || c1 == 0;
  if (pure || depth == params.max_depth ||
      idx.size() < static_cast<size_t>(params.min_samples_split))
    return builder.add_leaf_label(majority);

  const SplitChoice split = best_gini_split(data, idx);
  if (!split.found || split.gain <= 0.0)
    return builder.add_leaf_label(majority);

  std::vector<size_t> left_idx, right_idx;
  for (size_t i : idx) {
    (data.rows[i][static_cast<size_t>(split.feature)] <= split.threshold
         ? left_idx
         : right_idx)
        .push_back(i);
  }
  const int id = builder.add_internal(split.feature, split.threshold);
  const int left = grow_cart(data, left_idx, depth + 1, params, builder);
  const int right = grow_cart(data, right_idx, depth + 1, params, builder);
  builder.set_children(id, left, right);
  return id;
}

}  // namespace

Tree train_cart(const Dataset& train, const TrainParams& params) {
  params.validate();
  const DenseData data = densify(train, /*require_binary=*/true);
  std::vector<size_t> idx(data.rows.size());
  std::iota(idx.begin(), idx.end(), 0u);
  TreeBuilder builder(TreeMode::classifier);
  grow_cart(data, idx, 0, params, builder);
  return builder.take();
}

namespace {

struct NewtonSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  bool found = false;
};

NewtonSplit best_newton_split(const DenseData& data,
                              const std::vector<size_t>& idx,
                              const std::vector<double>& grad,
                              const std::vector<double>& hess, double l2) {
  double g_total = 0.0, h_total = 0.0;
  for (size_t i : idx) {
    g_total += grad[i];
    h_total += hess[i];
  }
  const double parent_score = g_total * g_total / (h_total + l2);

  NewtonSplit best;
  std::vector<std::pair<double, size_t>> values(idx.size());
  for (int f = 0; f < data.d; ++f) {
    for (size_t k = 0; k < idx.size(); ++k)
      values[k] = {data.rows[idx[k]][static_cast<size_t>(f)], idx[k]};
    std::sort(values.begin(), values.end());

    double gl = 0.0, hl = 0.0;
    for (size_t k = 0; k + 1 < values.size(); ++k) {
      gl += grad[values[k].second];
      hl += hess[values[k].second];
      if (values[k].first == values[k + 1].first) continue;
      const double threshold =
          values[k].first + 0.5 * (values[k + 1].first - values[k].first);
      const double gr = g_total - gl;
      const double hr = h_total - hl;
      const double gain = 0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2) -
                                 parent_score);
      if (!best.found || gain > best.gain) {
        best = {f, threshold, gain, true};
      }
    }
  }
  return best;
}

int grow_newton(const DenseData& data, const std::vector<size_t>& idx,
                int depth, const TrainParams& params,
                const std::vector<double>& grad,
                const std::vector<double>& hess, TreeBuilder& builder) {
  auto make_leaf = [&] {
    double g = 0.0, h = 0.0;
    for (size_t i : idx) {
      g += grad[i];
      h += hess[i];
    }
    return builder.add_leaf_value(-params.learning_rate * g /
                                  (h + params.l2_reg));
  };

  if (depth == params.max_depth ||
      idx.size() < static_cast<size_t>(params.min_samples_split))
    return make_leaf();
  const NewtonSplit split =
      best_newton_split(data, idx, grad, hess, params.l2_reg);
  if (!split.found || split.gain <= 0.0) return make_leaf();

  std::vector<size_t> left_idx, right_idx;
  for (size_t i : idx) {
    (data.rows[i][static_cast<size_t>(split.feature)] <= split.threshold
         ? left_idx
         : right_idx)
        .push_back(i);
  }
  const int id = builder.add_internal(split.feature, split.threshold);
  const int left =
      grow_newton(data, left_idx, depth + 1, params, grad, hess, builder);
  const int right =
      grow_newton(data, right_idx, depth + 1, params, grad, hess, builder);
  builder.set_children(id, left, right);
  return id;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Ensemble train_boosted(const Dataset& train, const TrainParams& params) {
  params.validate();
  const DenseData data = densify(train, /*require_binary=*/true);
  const size_t n = data.rows.size();

  Ensemble ensemble;
  ensemble.mode = TreeMode::additive;
  ensemble.n_features = data.d;
  ensemble.base_score = 0.0;

  std::vector<double> scores(n, ensemble.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);

  for (int round = 0; round < params.n_rounds; ++round) {
    for (size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      grad[i] = p - static_cast<double>(data.labels[i]);
      hess[i] = p * (1.0 - p);
    }
    TreeBuilder builder(TreeMode::additive);
    grow_newton(data, idx, 0, params, grad, hess, builder);
    Tree tree = builder.take();
    for (size_t i = 0; i < n; ++i) {
      Example ex;
      for (int f = 0; f < data.d; ++f) {
        const double v = data.rows[i][static_cast<size_t>(f)];
        if (v != 0.0) ex.features[f] = v;
      }
      scores[i] += tree.node(traverse(tree, ex)).value;
    }
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

namespace {

template <typename Model>
Metrics evaluate_impl(const Model& model, const Dataset& test) {
  if (test.examples.empty()) throw DataError("test set is empty");
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  for (const Example& ex : test.examples) {
    int predicted;
    if constexpr (std::is_same_v<Model, Tree>) {
      predicted = model.node(traverse(model, ex)).label;
    } else {
      predicted = predict(model, ex).label;
    }
    if (predicted == 1)
      (ex.label == 1 ? tp : fp)++;
    else
      (ex.label == 1 ? fn : tn)++;
  }
  return Metrics::from_confusion(tp, fp, fn, tn);
}

}  // namespace

Metrics evaluate(const Tree& tree, const Dataset& test) {
  if (tree.mode != TreeMode::classifier)
    throw ModeError("evaluate(Tree) requires a classifier tree");
  return evaluate_impl(tree, test);
}

Metrics evaluate(const Ensemble& ensemble, const Dataset& test) {
  return evaluate_impl(ensemble, test);
}

GridResult grid_search(const Dataset& train, const Dataset& test,
                       const std::vector<int>& depths,
                       const std::vector<int>& min_samples) {
  if (depths.empty() || min_samples.empty())
    throw ConfigError("grid_search requires nonempty parameter lists");

  GridResult result;
  bool have_best = false;
  for (int depth : depths) {
    for (int ms : min_samples) {
      TrainParams params;
      params.max_depth = depth;
      params.min_samples_split = ms;
      Tree tree;
      Metrics metrics;
      try {
        tree = train_cart(train, params);
        metrics = evaluate(tree, test);
      } catch (const Error& e) {
        throw DataError("grid cell (max_depth=" + std::to_string(depth) +
                        ", min_samples_split=" + std::to_string(ms) +
                        "): " + e.what());
      }
      result.cells.push_back({params, metrics});
      const bool better =
          !have_best || metrics.f1 > result.best_metrics.f1 ||
          (metrics.f1 == result.best_metrics.f1 &&
           (depth < result.best_params.max_depth ||
            (depth == result.best_params.max_depth &&
             ms < result.best_params.min_samples_split)));
      if (better) {
        result.best_model = std::move(tree);
        result.best_params = params;
        result.best_metrics = metrics;
        have_best = true;
      }
    }
  }
  return result;
}

Ensemble as_classifier_ensemble(const Tree& tree, int n_features) {
  Ensemble ensemble;
  ensemble.mode = TreeMode::classifier;
  ensemble.n_features = n_features;
  ensemble.base_score = 0.0;
  ensemble.trees.push_back(tree);
  return ensemble;
}

}  // namespace treecert
