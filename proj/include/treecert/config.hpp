#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "treecert/verifier.hpp"

namespace treecert {

/// One configuration file drives both training and verification. Paths are
/// resolved relative to the config file's directory. Defaults reproduce the
/// reference verification setting (eps_init 0.3, max_clique 2, max_search
/// 10, max_level 1, dp 0).
struct Config {
  std::string model;
  std::string data;
  int num_points = 1000;
  double eps_init = 0.3;
  int max_clique = 2;
  int max_search = 10;
  int max_level = 1;
  int dp = 0;
  std::int64_t seed = 0;
  double train_fraction = 0.2;

  VerifyParams verify_params() const {
    return VerifyParams{eps_init, max_search, max_level, max_clique, dp};
  }
};

/// Unknown keys are rejected; omitted keys take the defaults above. Type
/// mismatches and out-of-range values raise ConfigError naming the key.
Config parse_config(const std::string& json_text,
                    const std::filesystem::path& base_dir = {});

Config load_config(const std::filesystem::path& file);

}  // namespace treecert
