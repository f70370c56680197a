#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sublab/bounds.hpp"
#include "sublab/config.hpp"

namespace sublab {

/// A contract invariant measured by an experiment: pass ⇔ value ≤ limit.
struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = true;
};

Check make_check(std::string name, double value, double limit);

struct ExperimentResult {
  std::string name;
  std::string kind;
  std::vector<BoundReport> bounds;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> flags;  // informational findings (e.g. "dphi_singular")
  std::vector<Series> series;
  std::optional<std::string> error;
  double wall_seconds = 0.0;

  bool pass() const;
};

struct RunReport {
  std::string version;
  Json config;
  std::string scenario;
  ParamMap params;
  std::map<std::string, double> assumptions;
  std::vector<std::pair<std::string, double>> settings;
  std::vector<ExperimentResult> results;
  int jobs = 1;
  double wall_seconds = 0.0;

  bool pass() const;
};

/// Full-fidelity structured form. Wall times and the worker count sit under
/// "timing" so that everything else is reproducible byte for byte.
Json to_json(const RunReport& report);

/// Serializes with every double printed as %.17g; non-finite values become
/// the strings "inf", "-inf" and "nan".
std::string write_json(const Json& value);

/// `to_json` without the "timing" member, serialized.
std::string numeric_content(const RunReport& report);

/// One row per BoundReport: experiment, name, lhs, rhs, margin, pass, tolerance, parameters.
std::string bounds_table(const RunReport& report);

std::string series_table(const Series& series);

/// Writes report.json, bounds.csv and series/<experiment>.<series>.dat as
/// selected by `formats` (struct | table | series). Returns the written paths.
std::vector<std::filesystem::path> emit(const RunReport& report, const std::filesystem::path& directory,
                                        const std::vector<std::string>& formats);

}  // namespace sublab
