#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcaet/pipeline.hpp"

namespace pcaet::cli {

/// Files a command reads; which ones are required depends on the command.
struct InputPaths {
  std::string phantom;  // directory written by `phantom`
  std::string series;   // directory written by `simulate`
  std::string volume;   // raw volume
  std::string traced;   // traced-atom CSV
  std::string truth;    // atom CSV
};

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 keeps the OpenMP default
  DeskConfig desk;
  std::vector<double> reg_weights;  // non-empty: one reconstruction per weight
  InputPaths inputs;
};

/// Strict reader: any key not listed in the schema is a ConfigError. A run manifest
/// (an object with "command" and "config") is accepted and its "config" used.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Every field with its effective value, in the same layout parse_config reads.
nlohmann::json to_json(const RunConfig& c);

}  // namespace pcaet::cli
