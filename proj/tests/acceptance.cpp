// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support.hpp"
#include "treecert/data_io.hpp"
#include "treecert/model.hpp"
#include "treecert/oracle.hpp"
#include "treecert/rules.hpp"
#include "treecert/training.hpp"
#include "treecert/verifier.hpp"

using namespace treecert;
using namespace treecert::test;
namespace fs = std::filesystem;

namespace {

struct CheckFailure {
  std::string message;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure{message};
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

VerifyParams params_with(int max_level, int max_clique, int dp,
                         double eps_init = 0.3, int max_search = 10) {
  VerifyParams p;
  p.eps_init = eps_init;
  p.max_search = max_search;
  p.max_level = max_level;
  p.max_clique = max_clique;
  p.dp = dp;
  return p;
}

// ---------------------------------------------------------------------------

void criterion_1_box_and_perturbation_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();

  const LeafBoxes boxes = compute_leaf_boxes(depth2_tree(), 2);
  require(boxes.by_leaf.at(2).dim(0) == Interval{-kInf, 0.5} &&
              boxes.by_leaf.at(2).dim(1) == Interval{-kInf, 0.3},
          "leaf L1 box mismatch");
  require(boxes.by_leaf.at(3).dim(0) == Interval{-kInf, 0.5} &&
              boxes.by_leaf.at(3).dim(1) == Interval{0.3, kInf},
          "leaf L2 box mismatch");
  require(boxes.by_leaf.at(4).dim(0) == Interval{0.5, kInf} &&
              boxes.by_leaf.at(4).dim(1) == Interval{-kInf, kInf},
          "leaf L3 box mismatch");

  Box above(1);
  above.dim(0) = {0.1, 0.5};
  require(std::abs(leaf_perturbation(make_example({0.7}), above)[0] - 0.2) <
              1e-12,
          "above-interval branch");
  Box below(1);
  below.dim(0) = {0.5, kInf};
  require(std::abs(leaf_perturbation(make_example({0.3}), below)[0] - 0.2) <
              1e-12,
          "below-interval branch");
  Box containing(1);
  containing.dim(0) = {0.0, 1.0};
  require(leaf_perturbation(make_example({0.5}), containing)[0] == 0.0,
          "inside-interval branch");

  std::mt19937_64 rng(1001);
  for (int iter = 0; iter < 10000; ++iter) {
    const int d = 1 + static_cast<int>(rng() % 4);
    Box box(d);
    for (int t = 0; t < d; ++t) {
      double lo = 4.0 * uniform01(rng) - 2.0;
      double hi = lo + 2.0 * uniform01(rng) + 1e-9;
      if (rng() % 4 == 0) lo = -kInf;
      if (rng() % 4 == 0) hi = kInf;
      box.dim(t) = {lo, hi};
    }
    std::vector<double> coords(static_cast<size_t>(d));
    for (double& c : coords) c = 6.0 * uniform01(rng) - 3.0;
    const Example x = make_example(coords);
    const auto eps = leaf_perturbation(x, box);
    double norm = 0.0;
    for (double component : eps) {
      require(component >= 0.0, "negative perturbation component");
      norm = std::max(norm, component);
    }
    require((norm == 0.0) == box.contains(x),
            "containment equivalence violated");
  }
  require(elapsed_s(t0) < 1.0, "criterion 1 exceeded 1 s");
}

void criterion_2_single_tree_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2002);
  for (int iter = 0; iter < 500; ++iter) {
    const int d = 1 + static_cast<int>(rng() % 5);
    const Tree tree = random_classifier_tree(rng, d, 4);
    Ensemble wrapper;
    wrapper.mode = TreeMode::classifier;
    wrapper.n_features = d;
    wrapper.trees.push_back(tree);
    const Example x = random_point(rng, d);
    const int y0 = tree.node(traverse(tree, x)).label;
    const double exact = verify_tree_exact(tree, d, x, y0);
    const double brute = brute_force_rstar(wrapper, x, y0);
    require(exact == brute, "single-tree radius differs from brute force");
  }
  require(elapsed_s(t0) < 10.0, "criterion 2 exceeded 10 s");
}

struct SoundnessStats {
  long long bound_checks = 0;
  long long soundness_violations = 0;
  long long dominance_violations = 0;
  long long level_violations = 0;
  long long radius_violations = 0;
};

SoundnessStats run_soundness_sweep() {
  SoundnessStats stats;
  std::mt19937_64 rng(3003);
  const double radii[] = {0.05, 0.1, 0.2, 0.4, 0.8};
  for (int iter = 0; iter < 1000; ++iter) {
    const int d = 1 + static_cast<int>(rng() % 4);
    const Ensemble e = random_additive_ensemble(rng, 5, d, 3);
    const Example x = random_point(rng, d);
    const int y0 = predict(e, x).label;
    const EnsembleGeometry geometry(e);

    // bound[level-1][clique-2][dp] per radius, for the comparisons below.
    double prev[2][2][2];
    bool have_prev = false;
    for (double eps : radii) {
      const double exact = brute_force_min_margin(e, x, y0, eps);
      double cur[2][2][2];
      for (int level : {1, 2}) {
        for (int clique : {2, 3}) {
          for (int dp : {0, 1}) {
            const double bound = ensemble_margin_bound(
                geometry, x, y0, eps, params_with(level, clique, dp));
            cur[level - 1][clique - 2][dp] = bound;
            ++stats.bound_checks;
            if (bound > exact + 1e-9) ++stats.soundness_violations;
          }
          if (cur[level - 1][clique - 2][1] <
              cur[level - 1][clique - 2][0] - 1e-12)
            ++stats.dominance_violations;
        }
      }
      for (int clique : {2, 3}) {
        for (int dp : {0, 1}) {
          if (cur[1][clique - 2][dp] < cur[0][clique - 2][dp] - 1e-12)
            ++stats.level_violations;
        }
      }
      if (have_prev) {
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
              if (cur[a][b][c] > prev[a][b][c] + 1e-12)
                ++stats.radius_violations;
      }
      std::copy(&cur[0][0][0], &cur[0][0][0] + 8, &prev[0][0][0]);
      have_prev = true;
    }
  }
  return stats;
}

void criterion_3_ensemble_soundness(const SoundnessStats& stats,
                                    double seconds) {
  require(stats.bound_checks >= 1000 * 5 * 8,
          "sweep ran fewer checks than required");
  require(stats.soundness_violations == 0,
          std::to_string(stats.soundness_violations) +
              " soundness violations");
  require(seconds < 120.0, "criterion 3 exceeded 2 min");
}

void criterion_4_dominance_and_monotonicity(const SoundnessStats& stats) {
  require(stats.dominance_violations == 0, "chain DP fell below plain sum");
  require(stats.level_violations == 0, "extra level loosened a bound");
  require(stats.radius_violations == 0, "bound increased with the radius");
}

void criterion_5_single_probe_identity() {
  const Ensemble pair = stump_pair();
  Dataset ds;
  ds.n_features = 1;
  std::mt19937_64 rng(5005);
  for (int i = 0; i < 50; ++i) {
    const double x = uniform01(rng);
    ds.examples.push_back(make_example({x}, rng() % 2 ? 1 : 0));
  }
  for (double eps_init : {0.05, 0.1, 0.3}) {
    const Report report = run_verification(
        pair, ds, params_with(1, 2, 0, eps_init, 1), 1000);
    require(std::abs(report.average_bound -
                     eps_init * (1.0 - report.verified_error)) <= 1e-12,
            "single-probe identity broke at eps_init " +
                std::to_string(eps_init));
  }

  // Published verified errors against the corresponding single-probe
  // average bounds, all at eps_init 0.3.
  const struct {
    double verified_error;
    double avg_bound;
  } published[] = {{0.77, 0.07}, {0.40, 0.18}, {0.44, 0.17}, {0.49, 0.15}};
  for (const auto& row : published) {
    require(std::abs(0.3 * (1.0 - row.verified_error) - row.avg_bound) <=
                0.005,
            "published identity product off by more than 0.005");
  }
}

void criterion_6_metrics_fidelity() {
  const Metrics m = Metrics::from_confusion(543273, 419977, 866727, 0);
  require(m.precision == 0.564, "precision is not exactly 0.564");
  require(m.recall == 0.3853, "recall is not exactly 0.3853");
  require(std::abs(m.f1 - 0.4578) <= 5e-4, "F1 differs from 45.78%");

  std::mt19937_64 rng(6006);
  for (int iter = 0; iter < 2000; ++iter) {
    const long long tp = rng() % 500, fp = rng() % 500, fn = rng() % 500,
                    tn = rng() % 500;
    const long long total = tp + fp + fn + tn;
    if (total == 0) continue;
    const Metrics r = Metrics::from_confusion(tp, fp, fn, tn);
    require(r.accuracy == static_cast<double>(tp + tn) / total,
            "accuracy identity");
    require(r.precision ==
                (tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0),
            "precision identity");
    require(r.recall ==
                (tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0),
            "recall identity");
    const double expected_f1 =
        r.precision + r.recall > 0
            ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
            : 0.0;
    require(r.f1 == expected_f1, "F1 identity");
  }
}

void criterion_7_grid_tie_break() {
  Dataset ds;
  ds.n_features = 1;
  for (int i = 0; i < 16; ++i)
    ds.examples.push_back(
        make_example({static_cast<double>(i)}, i < 8 ? 0 : 1));

  for (int repeat = 0; repeat < 10; ++repeat) {
    const GridResult grid = grid_search(ds, ds, {3, 5}, {2});
    require(grid.cells.size() == 2, "expected two grid cells");
    require(grid.cells[0].metrics.f1 == grid.cells[1].metrics.f1,
            "fixture no longer ties on F1");
    require(grid.best_params.max_depth == 3,
            "tie resolved to the deeper tree on repeat " +
                std::to_string(repeat));
  }
}

void criterion_8_code_table_fidelity() {
  const auto maps =
      load_unification_maps(slurp(data_path("unification_maps.json")));

  const std::vector<std::pair<std::string, long long>> maryland = {
      {"Single Vehicle", 1},
      {"Same Direction Rear End", 2},
      {"Same Direction Rear End Left Turn", 2},
      {"Same Direction Rear End Right Turn", 2},
      {"Same Movement Angle", 3},
      {"Angle Meets Right Turn", 3},
      {"Same Direction Right Turn", 3},
      {"Angle Meets Left Turn", 3},
      {"Same Direction Left Turn", 3},
      {"Same Direction Both Left Turn", 3},
      {"Same Direction Sideswipe", 4},
      {"Opposite Direction Both Left Turn", 5},
      {"Opposite Direction Sideswipe", 5},
      {"Head On", 6},
      {"Head On Left Turn", 6},
      {"Angle Meets Left Turn Head On", 6},
      {"Other", 99},
      {"Unknown", 99},
      {"Not Applicable", 99},
  };
  const std::vector<std::pair<std::string, long long>> arizona = {
      {"Single Vehicle", 1},
      {"Rear End", 2},
      {"ANGLE (Front To Side)--(Other Than Left Turn)", 3},
      {"Left Turn", 3},
      {"Angle--Other Than Left Turn 2", 3},
      {"U Turn", 3},
      {"Sideswipe Same Direction", 4},
      {"Sideswipe Opposite Direction", 5},
      {"Head On", 6},
      {"Rear To Rear", 7},
      {"Rear To Side", 10},
      {"10", 10},
      {"Other", 99},
      {"Unknown", 99},
  };

  int mismatches = 0;
  auto check_rows =
      [&](const std::vector<std::pair<std::string, long long>>& rows) {
        for (const auto& [raw, code] : rows) {
          const UnifiedRecord u =
              unify_record({{"collision_manner", raw}}, maps, nullptr);
          if (std::get<long long>(u.at("collision_manner")) != code)
            ++mismatches;
        }
      };
  check_rows(maryland);
  check_rows(arizona);

  // Arizona NULL cell: an absent or empty value lands on code 99.
  const UnifiedRecord missing = unify_record({}, maps, nullptr);
  if (std::get<long long>(missing.at("collision_manner")) != 99) ++mismatches;
  const UnifiedRecord empty =
      unify_record({{"collision_manner", ""}}, maps, nullptr);
  if (std::get<long long>(empty.at("collision_manner")) != 99) ++mismatches;

  require(mismatches == 0,
          std::to_string(mismatches) + " code-table mismatches");
}

struct CliError {
  std::string message;
};

void run_cli_or_throw(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  if (WEXITSTATUS(raw) != 0)
    throw CheckFailure{"CLI failed: " + args};
}

void validate_report_schema(const nlohmann::json& doc) {
  require(doc.is_object(), "report is not an object");
  for (const char* key : {"params", "num_points", "average_bound",
                          "verified_error", "certificates"})
    require(doc.contains(key), std::string("report missing key ") + key);
  require(doc["average_bound"].is_number(), "average_bound type");
  require(doc["verified_error"].is_number(), "verified_error type");
  require(doc["certificates"].is_array(), "certificates type");
  require(doc["num_points"].get<int>() ==
              static_cast<int>(doc["certificates"].size()),
          "num_points disagrees with certificate count");

  const auto& params = doc["params"];
  for (const char* key :
       {"eps_init", "max_search", "max_level", "max_clique", "dp"})
    require(params.contains(key), std::string("params missing ") + key);

  double bound_sum = 0.0;
  int not_verified = 0;
  for (const auto& cert : doc["certificates"]) {
    for (const char* key :
         {"index", "correct", "lower_bound", "verified_at_eps_init"})
      require(cert.contains(key), std::string("certificate missing ") + key);
    const double lb = cert["lower_bound"].get<double>();
    require(lb >= 0.0, "negative lower bound");
    if (!cert["correct"].get<bool>())
      require(lb == 0.0, "misclassified point with nonzero bound");
    bound_sum += lb;
    if (!cert["correct"].get<bool>() ||
        !cert["verified_at_eps_init"].get<bool>())
      ++not_verified;
  }
  const int n = doc["num_points"].get<int>();
  require(std::abs(doc["average_bound"].get<double>() - bound_sum / n) <=
              1e-9,
          "average_bound is not the certificate mean");
  require(std::abs(doc["verified_error"].get<double>() -
                   static_cast<double>(not_verified) / n) <= 1e-12,
          "verified_error is not the unverified fraction");
}

void criterion_9_end_to_end_run() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = fs::temp_directory_path() / "treecert_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const fs::path log = dir / "log.txt";
  const std::string libsvm = (dir / "crash.libsvm").string();

  run_cli_or_throw("--out " + libsvm + " unify " +
                       data_path("fixtures/synthetic_crash.csv") + " --maps " +
                       data_path("unification_maps.json") + " --schema " +
                       data_path("crash_schema.json"),
                   log);
  const Dataset ds = parse_libsvm(slurp(libsvm));
  require(ds.examples.size() >= 2000, "fixture has fewer than 2000 rows");

  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"model": "model.json", "data": "crash.libsvm", "seed": 42})";
  }
  const std::string config = (dir / "config.json").string();

  run_cli_or_throw("--config " + config + " train", log);
  const nlohmann::json grid =
      nlohmann::json::parse(slurp(dir / "model.json.grid.json"));
  require(grid["cells"].size() == 12, "grid report does not have 12 cells");

  run_cli_or_throw("rules --model " + (dir / "model.json").string() +
                       " --schema " + data_path("crash_schema.json"),
                   dir / "rules.txt");
  require(!slurp(dir / "rules.txt").empty(), "no rules rendered");

  run_cli_or_throw("--config " + config + " --out " +
                       (dir / "report.json").string() + " verify",
                   log);
  const std::string report_text = slurp(dir / "report.json");
  const nlohmann::json report = nlohmann::json::parse(report_text);
  validate_report_schema(report);
  require(report["num_points"].get<int>() == 1000,
          "verification did not cover 1000 points");
  require(report["params"]["eps_init"].get<double>() == 0.3 &&
              report["params"]["max_clique"].get<int>() == 2 &&
              report["params"]["max_search"].get<int>() == 10 &&
              report["params"]["max_level"].get<int>() == 1 &&
              report["params"]["dp"].get<int>() == 0,
          "verification did not run the default setting");

  // Deterministic rerun: retrain and reverify, then compare bytes.
  const std::string model_bytes = slurp(dir / "model.json");
  run_cli_or_throw("--config " + config + " train", log);
  require(slurp(dir / "model.json") == model_bytes,
          "retraining changed the model bytes");
  run_cli_or_throw("--config " + config + " --out " +
                       (dir / "report2.json").string() + " verify",
                   log);
  require(slurp(dir / "report2.json") == report_text,
          "verification rerun changed the report bytes");

  require(elapsed_s(t0) < 60.0, "criterion 9 exceeded 60 s");
}

void criterion_10_certified_radius_vs_oracle() {
  const Ensemble pair = stump_pair();
  const Example x = make_example({0.6});
  const double rstar = brute_force_rstar(pair, x, 1);
  require(std::abs(rstar - 0.1) < 1e-12, "oracle radius is not 0.1");

  const Certificate cert =
      certify_example(pair, x, 1, params_with(1, 2, 0, 0.3, 10));
  require(cert.correct, "clean prediction flagged incorrect");
  require(cert.lower_bound >= 0.09 && cert.lower_bound <= 0.1,
          "certified radius left [0.09, 0.1]");
  require(cert.lower_bound <= rstar, "certified radius exceeded the oracle");
}

}  // namespace

int main() {
  SoundnessStats sweep_stats;
  double sweep_seconds = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    sweep_stats = run_soundness_sweep();
    sweep_seconds = elapsed_s(t0);
  }

  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"criterion 1: box construction and perturbation vector fidelity",
       criterion_1_box_and_perturbation_fidelity},
      {"criterion 2: single-tree exactness vs brute force",
       criterion_2_single_tree_exactness},
      {"criterion 3: ensemble bound soundness (randomized sweep)",
       [&] { criterion_3_ensemble_soundness(sweep_stats, sweep_seconds); }},
      {"criterion 4: aggregation dominance and monotonicity",
       [&] { criterion_4_dominance_and_monotonicity(sweep_stats); }},
      {"criterion 5: single-probe average-bound identity",
       criterion_5_single_probe_identity},
      {"criterion 6: metrics fidelity", criterion_6_metrics_fidelity},
      {"criterion 7: grid-search tie-break", criterion_7_grid_tie_break},
      {"criterion 8: unification code-table fidelity",
       criterion_8_code_table_fidelity},
      {"criterion 9: end-to-end pipeline run", criterion_9_end_to_end_run},
      {"criterion 10: certified radius vs oracle radius",
       criterion_10_certified_radius_vs_oracle},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
      std::cout << "[PASS] " << name << '\n';
    } catch (const CheckFailure& f) {
      ++failures;
      std::cout << "[FAIL] " << name << ": " << f.message << '\n';
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] " << name << ": unexpected error: " << e.what()
                << '\n';
    }
  }
  std::cout << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criteria failed")
            << '\n';
  return failures == 0 ? 0 : 1;
}
