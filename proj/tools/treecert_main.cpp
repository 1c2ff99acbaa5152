// treecert: crash-record unification, tree training, rule extraction, and
// certified L-inf robustness verification for decision trees and ensembles.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treecert/config.hpp"
#include "treecert/data_io.hpp"
#include "treecert/model.hpp"
#include "treecert/rules.hpp"
#include "treecert/text.hpp"
#include "treecert/training.hpp"
#include "treecert/verifier.hpp"

namespace fs = std::filesystem;
using namespace treecert;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write via a sibling temp file and rename so readers never see a partial
// file.
void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::string out;
};

Config load_config_with_overrides(const CommonFlags& flags) {
  if (flags.config_path.empty())
    throw ConfigError("--config is required for this command");
  Config cfg = load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

int run_unify(const std::vector<std::string>& csv_paths,
              const std::string& maps_path, const std::string& schema_path,
              const std::string& out_path) {
  const auto maps = load_unification_maps(read_file(maps_path));
  const DatasetSchema schema = load_schema(read_file(schema_path));
  if (!schema.label)
    throw ConfigError("schema has no label rule; unify needs one");

  std::vector<UnifiedRecord> unified;
  std::ostringstream audit_log;
  for (const std::string& csv_path : csv_paths) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw DataError("cannot open " + csv_path);
    const auto records = read_csv(in);
    for (size_t row = 0; row < records.size(); ++row) {
      UnmappedValues audit;
      unified.push_back(unify_record(records[row], maps, &audit));
      for (const auto& [column, raw] : audit)
        audit_log << csv_path << ',' << (row + 1) << ',' << column << ','
                  << raw << '\n';
    }
  }
  const Dataset ds =
      encode_dataset(unified, schema.feature_order(), *schema.label);
  write_file_atomic(out_path, export_libsvm(ds));
  write_file_atomic(out_path + ".audit", audit_log.str());
  std::cout << "wrote " << ds.examples.size() << " examples ("
            << ds.n_features << " features) to " << out_path << '\n';
  return 0;
}

std::string grid_report_json(const GridResult& grid) {
  std::ostringstream os;
  os << "{\n  \"best\": {\"max_depth\": " << grid.best_params.max_depth
     << ", \"min_samples_split\": " << grid.best_params.min_samples_split
     << "},\n  \"cells\": [\n";
  for (size_t i = 0; i < grid.cells.size(); ++i) {
    const GridCell& cell = grid.cells[i];
    os << "    {\"max_depth\": " << cell.params.max_depth
       << ", \"min_samples_split\": " << cell.params.min_samples_split
       << ", \"accuracy\": " << format_double(cell.metrics.accuracy)
       << ", \"precision\": " << format_double(cell.metrics.precision)
       << ", \"recall\": " << format_double(cell.metrics.recall)
       << ", \"f1\": " << format_double(cell.metrics.f1) << "}"
       << (i + 1 < grid.cells.size() ? ",\n" : "\n");
  }
  os << "  ]\n}\n";
  return os.str();
}

int run_train(const CommonFlags& flags, bool boosted,
              const std::vector<int>& depths,
              const std::vector<int>& min_samples, const TrainParams& boost) {
  const Config cfg = load_config_with_overrides(flags);
  if (cfg.data.empty()) throw ConfigError("key 'data' is required for train");
  const std::string model_path = !flags.out.empty() ? flags.out : cfg.model;
  if (model_path.empty())
    throw ConfigError("key 'model' (or --out) is required for train");

  std::ifstream in(cfg.data, std::ios::binary);
  if (!in) throw DataError("cannot open " + cfg.data);
  const Dataset full = parse_libsvm(in);
  const auto [train, test] = split_train_test(
      full, cfg.train_fraction, static_cast<std::uint64_t>(cfg.seed));

  const std::string report_path = model_path + ".grid.json";
  if (boosted) {
    const Ensemble model = train_boosted(train, boost);
    const Metrics m = evaluate(model, test);
    write_file_atomic(model_path, dump_ensemble(model));
    GridResult single;
    single.best_params = boost;
    single.cells.push_back({boost, m});
    write_file_atomic(report_path, grid_report_json(single));
    std::cout << "boosted ensemble (" << model.trees.size()
              << " rounds): accuracy " << format_double(m.accuracy) << ", f1 "
              << format_double(m.f1) << '\n';
  } else {
    const GridResult grid = grid_search(train, test, depths, min_samples);
    write_file_atomic(model_path,
                      dump_ensemble(as_classifier_ensemble(grid.best_model,
                                                           full.n_features)));
    write_file_atomic(report_path, grid_report_json(grid));
    std::cout << "best tree: max_depth " << grid.best_params.max_depth
              << ", min_samples_split " << grid.best_params.min_samples_split
              << ", f1 " << format_double(grid.best_metrics.f1) << " ("
              << grid.cells.size() << " cells)\n";
  }
  std::cout << "wrote " << model_path << " and " << report_path << '\n';
  return 0;
}

int run_rules(const std::string& model_path, const std::string& schema_path,
              int target, const std::string& data_path,
              const std::string& out_path) {
  const Ensemble ensemble = load_ensemble(read_file(model_path));
  if (ensemble.mode != TreeMode::classifier)
    throw ModeError("rules require classifier mode");

  std::optional<DatasetSchema> schema;
  if (!schema_path.empty()) schema = load_schema(read_file(schema_path));
  const DatasetSchema* schema_ptr = schema ? &*schema : nullptr;

  std::vector<Rule> rules = extract_rules(ensemble.trees.front(), target);
  if (!data_path.empty()) {
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw DataError("cannot open " + data_path);
    const Dataset data = parse_libsvm(in, ensemble.n_features);
    annotate_support(rules, data);
  }

  std::vector<Rule> simplified;
  for (const Rule& rule : rules) {
    if (auto s = simplify(rule, schema_ptr)) simplified.push_back(*s);
  }

  std::vector<std::string> warnings;
  for (const Rule& rule : simplified) {
    std::cout << render(rule, schema_ptr, &warnings);
    if (rule.support > 0)
      std::cout << "   [support " << rule.support << ", confidence "
                << format_double(rule.confidence) << "]";
    std::cout << '\n';
  }
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()),
                 warnings.end());
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
  if (!out_path.empty())
    write_file_atomic(out_path, export_rules(simplified, schema_ptr));
  return 0;
}

int run_verify(const CommonFlags& flags) {
  const Config cfg = load_config_with_overrides(flags);
  if (cfg.model.empty()) throw ConfigError("key 'model' is required for verify");
  if (cfg.data.empty()) throw ConfigError("key 'data' is required for verify");

  const Ensemble ensemble = load_ensemble(read_file(cfg.model));
  std::ifstream in(cfg.data, std::ios::binary);
  if (!in) throw DataError("cannot open " + cfg.data);
  const Dataset data = parse_libsvm(in, ensemble.n_features);

  Report report =
      run_verification(ensemble, data, cfg.verify_params(), cfg.num_points);
  report.model_id = cfg.model;
  report.data_id = cfg.data;

  const std::string out_path = flags.out.empty() ? "report.json" : flags.out;
  write_file_atomic(out_path, serialize_report(report));
  std::cout << "avg bound = " << format_double(report.average_bound)
            << ", verified error = " << format_double(report.verified_error)
            << '\n';
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-model robustness certification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "Configuration file (JSON)");
  std::int64_t seed_value = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_value, "Override the configured seed");
  app.add_option("--out", flags.out, "Output path override");

  auto* unify = app.add_subcommand(
      "unify", "Unify raw crash CSVs into an encoded LIBSVM dataset");
  std::vector<std::string> csv_paths;
  std::string maps_path, schema_path;
  unify->add_option("csv", csv_paths, "Input CSV files")->required();
  unify->add_option("--maps", maps_path, "Unification mapping spec (JSON)")
      ->required();
  unify->add_option("--schema", schema_path, "Dataset schema (JSON)")
      ->required();

  auto* train = app.add_subcommand(
      "train", "Grid-search a classifier tree (or boost an ensemble)");
  bool boosted = false;
  std::vector<int> depths{3, 4, 5};
  std::vector<int> min_samples{2, 10, 20, 50};
  TrainParams boost_params;
  train->add_flag("--boosted", boosted, "Train an additive ensemble instead");
  train->add_option("--depths", depths, "Grid of max_depth values")
      ->delimiter(',');
  train->add_option("--min-samples", min_samples,
                    "Grid of min_samples_split values")
      ->delimiter(',');
  train->add_option("--rounds", boost_params.n_rounds, "Boosting rounds");
  train->add_option("--learning-rate", boost_params.learning_rate,
                    "Boosting learning rate");
  train->add_option("--l2", boost_params.l2_reg, "Leaf L2 regularization");
  train->add_option("--max-depth", boost_params.max_depth,
                    "Boosted tree depth");

  auto* rules = app.add_subcommand(
      "rules", "Print decision paths as implication logic");
  std::string rules_model, rules_schema, rules_data;
  int rules_target = 1;
  rules->add_option("--model", rules_model, "Model file")->required();
  rules->add_option("--schema", rules_schema, "Dataset schema (JSON)");
  rules->add_option("--target", rules_target, "Leaf label to extract");
  rules->add_option("--data", rules_data,
                    "LIBSVM data for support/confidence annotation");

  auto* verify = app.add_subcommand(
      "verify", "Certify robustness lower bounds for a model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count() > 0) flags.seed = seed_value;

  try {
    if (unify->parsed()) {
      if (flags.out.empty())
        throw ConfigError("--out is required for unify");
      return run_unify(csv_paths, maps_path, schema_path, flags.out);
    }
    if (train->parsed())
      return run_train(flags, boosted, depths, min_samples, boost_params);
    if (rules->parsed())
      return run_rules(rules_model, rules_schema, rules_target, rules_data,
                       flags.out);
    if (verify->parsed()) return run_verify(flags);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
