#include "treecert/config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace treecert {

namespace {

using json = nlohmann::json;

int require_int(const json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw ConfigError("key '" + key + "': expected an integer");
  return v.get<int>();
}

double require_number(const json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("key '" + key + "': expected a number");
  return v.get<double>();
}

std::string require_string(const json& v, const std::string& key) {
  if (!v.is_string())
    throw ConfigError("key '" + key + "': expected a string");
  return v.get<std::string>();
}

std::string resolve(const std::string& path,
                    const std::filesystem::path& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (base_dir / p).string();
}

}  // namespace

Config parse_config(const std::string& json_text,
                    const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = parse_json_strict(json_text);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  Config cfg;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "model") {
      cfg.model = resolve(require_string(v, key), base_dir);
    } else if (key == "data") {
      cfg.data = resolve(require_string(v, key), base_dir);
    } else if (key == "num_points") {
      cfg.num_points = require_int(v, key);
      if (cfg.num_points < 1)
        throw ConfigError("key 'num_points': must be >= 1");
    } else if (key == "eps_init") {
      cfg.eps_init = require_number(v, key);
      if (!(cfg.eps_init > 0.0))
        throw ConfigError("key 'eps_init': must be > 0");
    } else if (key == "max_clique") {
      cfg.max_clique = require_int(v, key);
      if (cfg.max_clique < 2)
        throw ConfigError("key 'max_clique': must be >= 2");
    } else if (key == "max_search") {
      cfg.max_search = require_int(v, key);
      if (cfg.max_search < 1)
        throw ConfigError("key 'max_search': must be >= 1");
    } else if (key == "max_level") {
      cfg.max_level = require_int(v, key);
      if (cfg.max_level < 1)
        throw ConfigError("key 'max_level': must be >= 1");
    } else if (key == "dp") {
      cfg.dp = require_int(v, key);
      if (cfg.dp != 0 && cfg.dp != 1)
        throw ConfigError("key 'dp': must be 0 or 1");
    } else if (key == "seed") {
      if (!v.is_number_integer())
        throw ConfigError("key 'seed': expected an integer");
      cfg.seed = v.get<std::int64_t>();
    } else if (key == "train_fraction") {
      cfg.train_fraction = require_number(v, key);
      if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("key 'train_fraction': must lie in (0, 1)");
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  return cfg;
}

Config load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), file.parent_path());
}

}  // namespace treecert
