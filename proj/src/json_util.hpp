#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "treecert/errors.hpp"

namespace treecert {

/// Parse JSON, rejecting duplicate object keys (nlohmann silently keeps the
/// last occurrence otherwise).
inline nlohmann::json parse_json_strict(const std::string& text) {
  using json = nlohmann::json;
  std::vector<std::set<std::string>> object_keys;
  json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event,
                                   json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        object_keys.emplace_back();
        break;
      case json::parse_event_t::object_end:
        object_keys.pop_back();
        break;
      case json::parse_event_t::key: {
        const std::string key = parsed.get<std::string>();
        if (!object_keys.back().insert(key).second)
          throw ParseError("duplicate key '" + key + "'");
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

/// Reject keys outside `allowed`, reporting the offending key and location.
inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key()))
      throw ParseError(where + ": unknown field '" + it.key() + "'");
  }
}

}  // namespace treecert
