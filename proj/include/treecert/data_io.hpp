#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "treecert/model.hpp"

namespace treecert {

struct Dataset {
  std::vector<Example> examples;
  int n_features = 0;
  std::vector<std::string> feature_names;  // optional schema

  bool operator==(const Dataset&) const = default;
};

/// LIBSVM text: "label idx:val idx:val ..." with 1-based strictly ascending
/// indices per line. Internal indices are 0-based; explicit zeros are
/// dropped (absent means 0). n_features is the largest index seen unless an
/// override is given; an override smaller than the data is rejected.
Dataset parse_libsvm(std::istream& in,
                     std::optional<int> n_features_override = std::nullopt);
Dataset parse_libsvm(const std::string& text,
                     std::optional<int> n_features_override = std::nullopt);

/// Inverse of parse_libsvm; zero values are omitted so that
/// parse_libsvm(export_libsvm(ds)) reproduces ds.
void export_libsvm(const Dataset& dataset, std::ostream& out);
std::string export_libsvm(const Dataset& dataset);

/// Declarative raw-category -> unified-code mapping for one feature.
/// Lookups normalize whitespace; anything unmapped (including null/empty)
/// falls back to default_code.
struct UnificationMap {
  std::string feature_name;
  long long default_code = 99;
  std::map<std::string, long long> entries;  // keys normalized
  std::optional<std::set<long long>> codebook;
};

/// Mapping spec: JSON array of {"feature", "default", "entries", optional
/// "codebook"}. Duplicate raw keys and codes outside the codebook are
/// rejected.
std::vector<UnificationMap> load_unification_maps(const std::string& json_text);

/// One crash-report row, column name -> raw text.
using RawRecord = std::map<std::string, std::string>;

/// Post-unification cell: integer code for mapped or integer-valued
/// columns, raw text otherwise (e.g. the severity column).
using UnifiedValue = std::variant<long long, std::string>;
using UnifiedRecord = std::map<std::string, UnifiedValue>;

/// (column, raw value) pairs that fell back to default_code; the caller
/// stamps file and row when writing the audit log.
using UnmappedValues = std::vector<std::pair<std::string, std::string>>;

/// Apply every map to its column; missing/empty cells count as null. Columns
/// without a map pass through as integers when they parse as such, otherwise
/// as raw text. Never fails; fallbacks are reported through `audit`.
UnifiedRecord unify_record(const RawRecord& record,
                           const std::vector<UnificationMap>& maps,
                           UnmappedValues* audit = nullptr);

struct LabelRule {
  std::string column;
  std::vector<std::string> severe_values;  // exact match after trimming
};

/// Lay out the listed columns as features 0..d-1 and derive the binary
/// label (1 iff the label column holds a severe value).
Dataset encode_dataset(const std::vector<UnifiedRecord>& records,
                       const std::vector<std::string>& feature_order,
                       const LabelRule& label_rule);

/// Deterministic shuffle under `seed`, then a floor(n * train_fraction) /
/// remainder split.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset,
                                             double train_fraction,
                                             std::uint64_t seed);

/// RFC-4180 CSV with a header row. Rows shorter than the header leave the
/// trailing columns absent.
std::vector<RawRecord> read_csv(std::istream& in);

struct SchemaFeature {
  std::string name;
  bool integer_valued = false;
  std::map<long long, std::string> codes;  // code -> category label
};

/// Dataset schema: feature order (and per-feature codebooks for rule
/// rendering) plus an optional label rule.
struct DatasetSchema {
  std::vector<SchemaFeature> features;
  std::optional<LabelRule> label;

  std::vector<std::string> feature_order() const;
  /// Index of a named feature, or -1.
  int feature_index(const std::string& name) const;
};

DatasetSchema load_schema(const std::string& json_text);

}  // namespace treecert
