#include "sublab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sublab {

Check make_check(std::string name, double value, double limit) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.limit = limit;
  c.pass = std::isfinite(value) && value <= limit;
  return c;
}

bool ExperimentResult::pass() const {
  if (error) return false;
  for (const auto& b : bounds)
    if (!b.pass) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

bool RunReport::pass() const {
  for (const auto& r : results)
    if (!r.pass()) return false;
  return true;
}

namespace {

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json named_values(const std::vector<std::pair<std::string, double>>& values) {
  Json out = Json::object();
  for (const auto& [k, v] : values) out[k] = number(v);
  return out;
}

Json bound_json(const BoundReport& b) {
  return Json{{"name", b.name},
              {"lhs", number(b.lhs)},
              {"rhs", number(b.rhs)},
              {"margin", number(b.margin)},
              {"pass", b.pass},
              {"tolerance", number(b.tolerance)},
              {"parameters", named_values(b.parameters)}};
}

Json series_json(const Series& s) {
  Json rows = Json::array();
  for (const auto& row : s.rows) {
    Json r = Json::array();
    for (double v : row) r.push_back(number(v));
    rows.push_back(std::move(r));
  }
  return Json{{"name", s.name}, {"columns", s.columns}, {"rows", std::move(rows)}};
}

Json result_json(const ExperimentResult& r) {
  Json bounds = Json::array();
  for (const auto& b : r.bounds) bounds.push_back(bound_json(b));
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name}, {"value", number(c.value)}, {"limit", number(c.limit)}, {"pass", c.pass}});
  Json series = Json::array();
  for (const auto& s : r.series) series.push_back(series_json(s));
  return Json{{"name", r.name},
              {"kind", r.kind},
              {"pass", r.pass()},
              {"error", r.error ? Json(*r.error) : Json(nullptr)},
              {"bounds", std::move(bounds)},
              {"checks", std::move(checks)},
              {"metrics", named_values(r.metrics)},
              {"flags", r.flags},
              {"series", std::move(series)}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void write(const Json& j, std::string& out, int indent) {
  const std::string pad(indent + 2, ' ');
  switch (j.type()) {
    case Json::value_t::number_float: out += format_double(j.get<double>()); return;
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(k).dump() + ": ";
        write(v, out, indent + 2);
      }
      out += "\n" + std::string(indent, ' ') + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Rows of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        write(v, out, indent + 2);
      }
      out += flat ? "]" : "\n" + std::string(indent, ' ') + "]";
      return;
    }
    default: out += j.dump(); return;
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

}  // namespace

Json to_json(const RunReport& report) {
  Json params = Json::object();
  for (const auto& [k, v] : report.params) params[k] = number(v);
  Json assumptions = Json::object();
  for (const auto& [k, v] : report.assumptions) assumptions[k] = number(v);
  Json results = Json::array();
  Json experiment_times = Json::object();
  for (const auto& r : report.results) {
    results.push_back(result_json(r));
    experiment_times[r.name] = r.wall_seconds;
  }
  return Json{{"version", report.version},
              {"config", report.config},
              {"scenario", Json{{"name", report.scenario}, {"params", std::move(params)}}},
              {"assumptions", std::move(assumptions)},
              {"settings", named_values(report.settings)},
              {"pass", report.pass()},
              {"results", std::move(results)},
              {"timing",
               Json{{"jobs", report.jobs},
                    {"wall_seconds", report.wall_seconds},
                    {"experiments", std::move(experiment_times)}}}};
}

std::string write_json(const Json& value) {
  std::string out;
  write(value, out, 0);
  out += "\n";
  return out;
}

std::string numeric_content(const RunReport& report) {
  Json j = to_json(report);
  j.erase("timing");
  return write_json(j);
}

std::string bounds_table(const RunReport& report) {
  std::string out = "experiment,name,lhs,rhs,margin,pass,tolerance,parameters\n";
  for (const auto& r : report.results) {
    for (const auto& b : r.bounds) {
      std::string params;
      for (const auto& [k, v] : b.parameters) {
        if (!params.empty()) params += ";";
        params += k + "=" + format_double(v);
      }
      out += csv_field(r.name) + "," + csv_field(b.name) + "," + format_double(b.lhs) + "," +
             format_double(b.rhs) + "," + format_double(b.margin) + "," + (b.pass ? "true" : "false") +
             "," + format_double(b.tolerance) + "," + csv_field(params) + "\n";
    }
  }
  return out;
}

std::string series_table(const Series& series) {
  std::string out = "#";
  for (const auto& c : series.columns) out += " " + c;
  out += "\n";
  for (const auto& row : series.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " " : "") + format_double(row[i]);
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> emit(const RunReport& report, const std::filesystem::path& directory,
                                        const std::vector<std::string>& formats) {
  auto wants = [&](const char* f) {
    for (const auto& g : formats)
      if (g == f) return true;
    return false;
  };
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + directory.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  if (wants("struct")) {
    written.push_back(directory / "report.json");
    write_file(written.back(), write_json(to_json(report)));
  }
  if (wants("table")) {
    written.push_back(directory / "bounds.csv");
    write_file(written.back(), bounds_table(report));
  }
  if (wants("series")) {
    bool any = false;
    for (const auto& r : report.results) any = any || !r.series.empty();
    if (any) {
      std::filesystem::create_directories(directory / "series", ec);
      if (ec) throw Error(ErrorKind::Io, "cannot create series directory: " + ec.message());
    }
    for (const auto& r : report.results) {
      for (const auto& s : r.series) {
        written.push_back(directory / "series" / (r.name + "." + s.name + ".dat"));
        write_file(written.back(), series_table(s));
      }
    }
  }
  return written;
}

}  // namespace sublab
