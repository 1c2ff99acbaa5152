#include "treecert/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "treecert/text.hpp"

namespace treecert {

namespace {

[[noreturn]] void line_error(size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<int> n_features_override) {
  Dataset ds;
  int max_index = 0;  // 1-based file index
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;

    Example ex;
    auto label = parse_int(tokens[0]);
    if (!label) line_error(line_no, "label '" + tokens[0] + "' is not an integer");
    ex.label = static_cast<int>(*label);

    int prev_index = 0;
    for (size_t i = 1; i < tokens.size(); ++i) {
      const std::string& tok = tokens[i];
      const size_t colon = tok.find(':');
      if (colon == std::string::npos)
        line_error(line_no, "expected idx:val, got '" + tok + "'");
      auto idx = parse_int(tok.substr(0, colon));
      auto val = parse_double(tok.substr(colon + 1));
      if (!idx || *idx < 1)
        line_error(line_no, "feature index '" + tok.substr(0, colon) +
                                "' is not a positive integer");
      if (!val)
        line_error(line_no, "feature value '" + tok.substr(colon + 1) +
                                "' is not a finite number");
      if (*idx <= prev_index)
        line_error(line_no, "feature index " + std::to_string(*idx) +
                                " is not strictly ascending");
      prev_index = static_cast<int>(*idx);
      max_index = std::max(max_index, prev_index);
      if (*val != 0.0) ex.features[prev_index - 1] = *val;
    }
    ds.examples.push_back(std::move(ex));
  }
  if (n_features_override) {
    if (*n_features_override < max_index)
      throw ParseError("declared n_features " +
                       std::to_string(*n_features_override) +
                       " is smaller than max index " +
                       std::to_string(max_index));
    ds.n_features = *n_features_override;
  } else {
    ds.n_features = max_index;
  }
  return ds;
}

Dataset parse_libsvm(const std::string& text,
                     std::optional<int> n_features_override) {
  std::istringstream is(text);
  return parse_libsvm(is, n_features_override);
}

void export_libsvm(const Dataset& dataset, std::ostream& out) {
  for (const Example& ex : dataset.examples) {
    out << ex.label;
    for (const auto& [index, value] : ex.features) {
      if (value == 0.0) continue;
      out << ' ' << (index + 1) << ':' << format_double(value);
    }
    out << '\n';
  }
}

std::string export_libsvm(const Dataset& dataset) {
  std::ostringstream os;
  export_libsvm(dataset, os);
  return os.str();
}

std::vector<UnificationMap> load_unification_maps(
    const std::string& json_text) {
  using json = nlohmann::json;
  json doc = parse_json_strict(json_text);
  if (!doc.is_array()) throw ParseError("mapping spec must be a JSON array");

  std::vector<UnificationMap> maps;
  for (size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "maps[" + std::to_string(i) + "]";
    const json& jm = doc[i];
    if (!jm.is_object()) throw ParseError(where + ": must be an object");
    reject_unknown_keys(jm, {"feature", "default", "entries", "codebook"},
                        where);
    if (!jm.contains("feature") || !jm["feature"].is_string())
      throw ParseError(where + ": missing string 'feature'");
    if (!jm.contains("default") || !jm["default"].is_number_integer())
      throw ParseError(where + ": missing integer 'default'");
    if (!jm.contains("entries") || !jm["entries"].is_object())
      throw ParseError(where + ": missing object 'entries'");

    UnificationMap map;
    map.feature_name = jm["feature"].get<std::string>();
    map.default_code = jm["default"].get<long long>();
    if (jm.contains("codebook")) {
      if (!jm["codebook"].is_array())
        throw ParseError(where + ": 'codebook' must be an array of integers");
      std::set<long long> codes;
      for (const json& c : jm["codebook"]) {
        if (!c.is_number_integer())
          throw ParseError(where + ": 'codebook' must be an array of integers");
        codes.insert(c.get<long long>());
      }
      map.codebook = std::move(codes);
    }
    for (auto it = jm["entries"].begin(); it != jm["entries"].end(); ++it) {
      if (!it.value().is_number_integer())
        throw ParseError(where + ": entry '" + it.key() +
                         "' must map to an integer code");
      const std::string key = collapse_whitespace(it.key());
      const long long code = it.value().get<long long>();
      if (!map.entries.emplace(key, code).second)
        throw ParseError(where + ": duplicate raw key '" + key +
                         "' after whitespace normalization");
    }
    if (map.codebook) {
      if (!map.codebook->contains(map.default_code))
        throw ParseError(where + ": default code " +
                         std::to_string(map.default_code) +
                         " is outside the codebook");
      for (const auto& [raw, code] : map.entries) {
        if (!map.codebook->contains(code))
          throw ParseError(where + ": code " + std::to_string(code) +
                           " for '" + raw + "' is outside the codebook");
      }
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

UnifiedRecord unify_record(const RawRecord& record,
                           const std::vector<UnificationMap>& maps,
                           UnmappedValues* audit) {
  UnifiedRecord out;
  std::set<std::string> mapped_columns;
  for (const UnificationMap& map : maps) {
    mapped_columns.insert(map.feature_name);
    auto it = record.find(map.feature_name);
    const std::string raw = it == record.end() ? std::string() : it->second;
    const std::string key = collapse_whitespace(raw);
    if (!key.empty()) {
      auto hit = map.entries.find(key);
      if (hit != map.entries.end()) {
        out[map.feature_name] = hit->second;
        continue;
      }
    }
    out[map.feature_name] = map.default_code;
    if (audit) audit->emplace_back(map.feature_name, raw);
  }
  for (const auto& [column, raw] : record) {
    if (mapped_columns.contains(column)) continue;
    if (auto i = parse_int(trim(raw)))
      out[column] = *i;
    else
      out[column] = raw;
  }
  return out;
}

Dataset encode_dataset(const std::vector<UnifiedRecord>& records,
                       const std::vector<std::string>& feature_order,
                       const LabelRule& label_rule) {
  Dataset ds;
  ds.n_features = static_cast<int>(feature_order.size());
  ds.feature_names = feature_order;
  for (size_t r = 0; r < records.size(); ++r) {
    const UnifiedRecord& record = records[r];
    Example ex;
    for (size_t f = 0; f < feature_order.size(); ++f) {
      auto it = record.find(feature_order[f]);
      if (it == record.end())
        throw DataError("record " + std::to_string(r) + ": unknown column '" +
                        feature_order[f] + "' in feature order");
      const auto* code = std::get_if<long long>(&it->second);
      if (code == nullptr)
        throw DataError("record " + std::to_string(r) + ": column '" +
                        feature_order[f] + "' is not integer-coded");
      if (*code != 0) ex.features[static_cast<int>(f)] = static_cast<double>(*code);
    }
    auto it = record.find(label_rule.column);
    if (it == record.end())
      throw DataError("record " + std::to_string(r) + ": missing label column '" +
                      label_rule.column + "'");
    const std::string value =
        std::holds_alternative<long long>(it->second)
            ? std::to_string(std::get<long long>(it->second))
            : trim(std::get<std::string>(it->second));
    const bool severe =
        std::find(label_rule.severe_values.begin(),
                  label_rule.severe_values.end(),
                  value) != label_rule.severe_values.end();
    ex.label = severe ? 1 : 0;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset,
                                             double train_fraction,
                                             std::uint64_t seed) {
  if (dataset.examples.empty()) throw DataError("cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");

  const size_t n = dataset.examples.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  // Hand-rolled Fisher-Yates: std::shuffle's draw sequence is not pinned by
  // the standard, and splits must be reproducible from the seed alone.
  std::mt19937_64 rng(seed);
  for (size_t i = n - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }

  const size_t n_train =
      static_cast<size_t>(std::floor(static_cast<double>(n) * train_fraction));
  Dataset train{{}, dataset.n_features, dataset.feature_names};
  Dataset test{{}, dataset.n_features, dataset.feature_names};
  train.examples.reserve(n_train);
  test.examples.reserve(n - n_train);
  for (size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).examples.push_back(dataset.examples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

std::vector<RawRecord> read_csv(std::istream& in) {
  // RFC-4180 state machine; quoted fields may contain commas, quotes
  // (doubled) and line breaks.
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool row_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    if (row_started || field_started || !field.empty()) {
      end_field();
      rows.push_back(std::move(row));
      row.clear();
    }
    row_started = false;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        row_started = true;
        break;
      case ',':
        end_field();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
        row_started = true;
        break;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field");
  end_row();

  if (rows.empty()) throw ParseError("CSV input has no header row");
  const std::vector<std::string>& header = rows.front();
  std::vector<RawRecord> records;
  records.reserve(rows.size() - 1);
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() > header.size())
      throw ParseError("CSV row " + std::to_string(r) +
                       " has more cells than the header");
    RawRecord record;
    for (size_t c2 = 0; c2 < rows[r].size(); ++c2)
      record[header[c2]] = rows[r][c2];
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::string> DatasetSchema::feature_order() const {
  std::vector<std::string> names;
  names.reserve(features.size());
  for (const SchemaFeature& f : features) names.push_back(f.name);
  return names;
}

int DatasetSchema::feature_index(const std::string& name) const {
  for (size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return static_cast<int>(i);
  return -1;
}

DatasetSchema load_schema(const std::string& json_text) {
  using json = nlohmann::json;
  json doc = parse_json_strict(json_text);
  if (!doc.is_object()) throw ParseError("schema must be a JSON object");
  reject_unknown_keys(doc, {"features", "label"}, "schema");
  if (!doc.contains("features") || !doc["features"].is_array())
    throw ParseError("schema: missing array 'features'");

  DatasetSchema schema;
  for (size_t i = 0; i < doc["features"].size(); ++i) {
    const std::string where = "schema.features[" + std::to_string(i) + "]";
    const json& jf = doc["features"][i];
    if (!jf.is_object()) throw ParseError(where + ": must be an object");
    reject_unknown_keys(jf, {"name", "codes", "integer"}, where);
    if (!jf.contains("name") || !jf["name"].is_string())
      throw ParseError(where + ": missing string 'name'");
    SchemaFeature feature;
    feature.name = jf["name"].get<std::string>();
    if (jf.contains("integer")) {
      if (!jf["integer"].is_boolean())
        throw ParseError(where + ": 'integer' must be a boolean");
      feature.integer_valued = jf["integer"].get<bool>();
    }
    if (jf.contains("codes")) {
      if (!jf["codes"].is_object())
        throw ParseError(where + ": 'codes' must be an object");
      for (auto it = jf["codes"].begin(); it != jf["codes"].end(); ++it) {
        auto code = parse_int(it.key());
        if (!code || !it.value().is_string())
          throw ParseError(where + ": 'codes' must map integer keys to strings");
        feature.codes[*code] = it.value().get<std::string>();
      }
      feature.integer_valued = true;
    }
    schema.features.push_back(std::move(feature));
  }
  if (doc.contains("label")) {
    const json& jl = doc["label"];
    if (!jl.is_object()) throw ParseError("schema.label: must be an object");
    reject_unknown_keys(jl, {"column", "severe_values"}, "schema.label");
    if (!jl.contains("column") || !jl["column"].is_string())
      throw ParseError("schema.label: missing string 'column'");
    if (!jl.contains("severe_values") || !jl["severe_values"].is_array())
      throw ParseError("schema.label: missing array 'severe_values'");
    LabelRule rule;
    rule.column = jl["column"].get<std::string>();
    for (const json& v : jl["severe_values"]) {
      if (!v.is_string())
        throw ParseError("schema.label: 'severe_values' must hold strings");
      rule.severe_values.push_back(v.get<std::string>());
    }
    schema.label = std::move(rule);
  }
  return schema;
}

}  // namespace treecert
