#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sublab/scenarios.hpp"

namespace sublab {

using Json = nlohmann::ordered_json;

struct ExperimentSpec {
  std::string name;
  std::string kind;  // tensors | bundle_map | bounds | sharpness | rescale
  std::vector<int> grid;                    // empty → kind default
  std::map<std::string, double> tolerances;  // overrides only
  std::uint64_t seed = 0;
  Json options = Json::object();

  double tolerance(const std::string& key, double fallback) const;
  double option(const std::string& key, double fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
};

struct OutputSpec {
  std::string directory = "sublab-out";
  std::vector<std::string> formats = {"struct", "table", "series"};
};

struct ExperimentConfig {
  std::string scenario;
  ParamMap params;
  std::vector<ExperimentSpec> experiments;
  OutputSpec output;
  Json source;  // the validated document, echoed into reports
};

/// Strict parse: unknown keys and mistyped values raise SchemaError with a JSON pointer.
ExperimentConfig parse_config(const Json& document);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sublab
