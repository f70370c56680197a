#include "sublab/config.hpp"

#include <fstream>
#include <set>

namespace sublab {

namespace {

enum class Type { Number, Integer, Boolean, String, NumberArray };

struct KindSchema {
  std::map<std::string, Type> options;
  std::set<std::string> tolerances;
};

const std::map<std::string, KindSchema>& kind_schemas() {
  static const std::map<std::string, KindSchema> schemas = {
      {"tensors",
       {{{"samples", Type::Integer}}, {"delta", "ii", "a", "map_distance"}}},
      {"bundle_map",
       {{{"fd_step", Type::Number}, {"prop33", Type::Boolean}, {"transversality", Type::Boolean}},
        {"commutation", "leakage", "phi", "dphi", "prop33"}}},
      {"bounds",
       {{{"experiment", Type::String},
         {"map", Type::String},
         {"r", Type::Number},
         {"direction", Type::NumberArray},
         {"constant", Type::Number},
         {"eps", Type::Number},
         {"alpha", Type::String},
         {"beta", Type::String},
         {"s_max", Type::Number},
         {"s_count", Type::Integer},
         {"loop", Type::String},
         {"space", Type::String}},
        {"bound"}}},
      {"sharpness", {{}, {"oracle", "identity"}}},
      {"rescale", {{{"lambda", Type::Number}}, {"drift"}}},
  };
  return schemas;
}

std::string child(const std::string& pointer, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') escaped += "~0";
    else if (c == '/') escaped += "~1";
    else escaped += c;
  }
  return pointer + "/" + escaped;
}

std::string child(const std::string& pointer, std::size_t index) {
  return pointer + "/" + std::to_string(index);
}

[[noreturn]] void fail(const std::string& key, const std::string& pointer, const std::string& what) {
  throw SchemaError(key, pointer.empty() ? "/" : pointer, what);
}

void require_object(const Json& j, const std::string& key, const std::string& pointer) {
  if (!j.is_object()) fail(key, pointer, "expected an object");
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& pointer) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(key, child(pointer, key), "unknown key");
}

const Json& required(const Json& j, const std::string& key, const std::string& pointer) {
  if (!j.contains(key)) fail(key, child(pointer, key), "missing required key");
  return j.at(key);
}

std::string as_string(const Json& j, const std::string& key, const std::string& pointer) {
  if (!j.is_string()) fail(key, pointer, "expected a string");
  return j.get<std::string>();
}

double as_number(const Json& j, const std::string& key, const std::string& pointer) {
  if (!j.is_number()) fail(key, pointer, "expected a number");
  return j.get<double>();
}

std::int64_t as_integer(const Json& j, const std::string& key, const std::string& pointer) {
  if (!j.is_number_integer()) fail(key, pointer, "expected an integer");
  return j.get<std::int64_t>();
}

void check_type(const Json& j, Type type, const std::string& key, const std::string& pointer) {
  switch (type) {
    case Type::Number: as_number(j, key, pointer); break;
    case Type::Integer: as_integer(j, key, pointer); break;
    case Type::Boolean:
      if (!j.is_boolean()) fail(key, pointer, "expected a boolean");
      break;
    case Type::String: as_string(j, key, pointer); break;
    case Type::NumberArray:
      if (!j.is_array()) fail(key, pointer, "expected an array of numbers");
      for (std::size_t i = 0; i < j.size(); ++i) as_number(j[i], key, child(pointer, i));
      break;
  }
}

ExperimentSpec parse_experiment(const Json& j, const std::string& pointer) {
  require_object(j, "experiments", pointer);
  reject_unknown(j, {"name", "kind", "grid", "tolerances", "seed", "options"}, pointer);
  ExperimentSpec e;
  e.name = as_string(required(j, "name", pointer), "name", child(pointer, "name"));
  if (e.name.empty()) fail("name", child(pointer, "name"), "experiment name must be nonempty");
  e.kind = as_string(required(j, "kind", pointer), "kind", child(pointer, "kind"));
  const auto schema = kind_schemas().find(e.kind);
  if (schema == kind_schemas().end())
    fail("kind", child(pointer, "kind"),
         "unknown experiment kind '" + e.kind + "' (expected tensors, bundle_map, bounds, sharpness or rescale)");

  if (j.contains("grid")) {
    const std::string at = child(pointer, "grid");
    const Json& grid = j.at("grid");
    if (!grid.is_array() || grid.empty()) fail("grid", at, "expected a nonempty array of counts");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::int64_t n = as_integer(grid[i], "grid", child(at, i));
      if (n < 1 || n > 4096) fail("grid", child(at, i), "grid counts must lie in [1, 4096]");
      e.grid.push_back(static_cast<int>(n));
    }
  }
  if (j.contains("tolerances")) {
    const std::string at = child(pointer, "tolerances");
    const Json& tol = j.at("tolerances");
    require_object(tol, "tolerances", at);
    reject_unknown(tol, schema->second.tolerances, at);
    for (const auto& [key, value] : tol.items()) {
      const double t = as_number(value, key, child(at, key));
      if (!(t >= 0.0)) fail(key, child(at, key), "tolerances must be nonnegative");
      e.tolerances[key] = t;
    }
  }
  if (j.contains("seed")) {
    const Json& seed = j.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
      fail("seed", child(pointer, "seed"), "expected a nonnegative integer");
    e.seed = seed.get<std::uint64_t>();
  }
  if (j.contains("options")) {
    const std::string at = child(pointer, "options");
    const Json& options = j.at("options");
    require_object(options, "options", at);
    std::set<std::string> allowed;
    for (const auto& [key, type] : schema->second.options) allowed.insert(key);
    reject_unknown(options, allowed, at);
    for (const auto& [key, value] : options.items())
      check_type(value, schema->second.options.at(key), key, child(at, key));
    e.options = options;
  }
  if (e.kind == "bounds") {
    if (!e.options.contains("experiment"))
      fail("experiment", child(pointer, "options/experiment"), "bounds experiments need options.experiment");
    const std::string which = e.options.at("experiment").get<std::string>();
    if (which != "variation" && which != "vertical_component" && which != "deviation" && which != "holonomy")
      fail("experiment", child(pointer, "options/experiment"),
           "expected variation, vertical_component, deviation or holonomy");
  }
  return e;
}

}  // namespace

double ExperimentSpec::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

double ExperimentSpec::option(const std::string& key, double fallback) const {
  return options.contains(key) ? options.at(key).get<double>() : fallback;
}

bool ExperimentSpec::flag(const std::string& key, bool fallback) const {
  return options.contains(key) ? options.at(key).get<bool>() : fallback;
}

std::string ExperimentSpec::text(const std::string& key, const std::string& fallback) const {
  return options.contains(key) ? options.at(key).get<std::string>() : fallback;
}

ExperimentConfig parse_config(const Json& document) {
  require_object(document, "", "");
  reject_unknown(document, {"scenario", "experiments", "output"}, "");
  ExperimentConfig config;
  config.source = document;

  const Json& scenario = required(document, "scenario", "");
  require_object(scenario, "scenario", "/scenario");
  reject_unknown(scenario, {"name", "params"}, "/scenario");
  config.scenario = as_string(required(scenario, "name", "/scenario"), "name", "/scenario/name");
  if (scenario.contains("params")) {
    const Json& params = scenario.at("params");
    require_object(params, "params", "/scenario/params");
    for (const auto& [key, value] : params.items())
      config.params[key] = as_number(value, key, child("/scenario/params", key));
  }

  const Json& experiments = required(document, "experiments", "");
  if (!experiments.is_array()) fail("experiments", "/experiments", "expected an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    const std::string at = child("/experiments", i);
    ExperimentSpec e = parse_experiment(experiments[i], at);
    if (!names.insert(e.name).second) fail("name", child(at, "name"), "duplicate experiment name '" + e.name + "'");
    config.experiments.push_back(std::move(e));
  }

  if (document.contains("output")) {
    const Json& output = document.at("output");
    require_object(output, "output", "/output");
    reject_unknown(output, {"directory", "formats"}, "/output");
    if (output.contains("directory"))
      config.output.directory = as_string(output.at("directory"), "directory", "/output/directory");
    if (output.contains("formats")) {
      const Json& formats = output.at("formats");
      if (!formats.is_array()) fail("formats", "/output/formats", "expected an array of strings");
      config.output.formats.clear();
      for (std::size_t i = 0; i < formats.size(); ++i) {
        const std::string at = child("/output/formats", i);
        const std::string f = as_string(formats[i], "formats", at);
        if (f != "struct" && f != "table" && f != "series")
          fail("formats", at, "expected struct, table or series");
        config.output.formats.push_back(f);
      }
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  Json document;
  try {
    document = Json::parse(in, nullptr, true, /*ignore_comments=*/false);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Schema, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(document);
}

}  // namespace sublab
