#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sublab/runner.hpp"

using namespace sublab;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = SUBLAB_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sublab-test-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Structural equality with numeric tolerance; every mismatch is reported with its path.
void compare(const Json& expected, const Json& actual, const std::string& path, std::vector<std::string>& diffs) {
  if (expected.is_number() && actual.is_number()) {
    const double a = expected.get<double>(), b = actual.get<double>();
    if (std::abs(a - b) > 1e-10 + 1e-8 * std::max(std::abs(a), std::abs(b))) diffs.push_back(path);
    return;
  }
  if (expected.type() != actual.type()) {
    diffs.push_back(path + " (type)");
    return;
  }
  if (expected.is_object()) {
    if (expected.size() != actual.size()) diffs.push_back(path + " (keys)");
    for (const auto& [k, v] : expected.items()) {
      if (!actual.contains(k)) {
        diffs.push_back(path + "/" + k + " (missing)");
        continue;
      }
      compare(v, actual.at(k), path + "/" + k, diffs);
    }
    return;
  }
  if (expected.is_array()) {
    if (expected.size() != actual.size()) {
      diffs.push_back(path + " (length)");
      return;
    }
    for (std::size_t i = 0; i < expected.size(); ++i) compare(expected[i], actual[i], path + "/" + std::to_string(i), diffs);
    return;
  }
  if (expected != actual) diffs.push_back(path);
}

Json minimal_config() {
  return Json::parse(R"({
    "scenario": {"name": "flat_torus_pair", "params": {"a": 0.3}},
    "experiments": [
      {"name": "t", "kind": "tensors", "grid": [4, 8]},
      {"name": "h", "kind": "bounds", "options": {"experiment": "holonomy"}}
    ]
  })");
}

template <typename Fn>
SchemaError schema_error(Fn&& fn) {
  try {
    fn();
  } catch (const SchemaError& e) {
    return e;
  }
  FAIL("expected a schema error");
  return SchemaError("", "", "");
}

int run_cli(const std::string& args) {
  const std::string command = std::string(SUBLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("strict config schema") {
  SUBCASE("misspelled top-level key") {
    Json doc = minimal_config();
    doc["scenarioo"] = doc["scenario"];
    const SchemaError e = schema_error([&] { parse_config(doc); });
    CHECK(e.key() == "scenarioo");
    CHECK(e.location() == "/scenarioo");
    CHECK(std::string(e.what()).find("scenarioo") != std::string::npos);
  }
  SUBCASE("unknown option for the experiment kind") {
    Json doc = minimal_config();
    doc["experiments"][0]["options"] = {{"fd_step", 1e-4}};
    const SchemaError e = schema_error([&] { parse_config(doc); });
    CHECK(e.key() == "fd_step");
    CHECK(e.location() == "/experiments/0/options/fd_step");
  }
  SUBCASE("mistyped and missing values") {
    Json doc = minimal_config();
    doc["experiments"][0]["grid"] = {4, "x"};
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
    doc = minimal_config();
    doc.erase("experiments");
    CHECK(schema_error([&] { parse_config(doc); }).key() == "experiments");
    doc = minimal_config();
    doc["experiments"][1]["name"] = "t";
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
    doc = minimal_config();
    doc["experiments"][0]["kind"] = "teleport";
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
    doc = minimal_config();
    doc["output"] = {{"formats", {"xml"}}};
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
    doc = minimal_config();
    doc["experiments"][0]["seed"] = -3;
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
  }
  SUBCASE("unreadable and malformed files") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
    const fs::path dir = scratch("malformed");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{ \"scenario\": ";
    try {
      load_config(dir / "bad.json");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
    }
  }
}

TEST_CASE("running configs") {
  SUBCASE("empty experiment list") {
    Json doc = minimal_config();
    doc["experiments"] = Json::array();
    const RunReport report = run(parse_config(doc), 1);
    CHECK(report.results.empty());
    CHECK(report.pass());
    CHECK(to_json(report)["results"].empty());
  }
  SUBCASE("experiment errors are captured without stopping the run") {
    Json doc = minimal_config();
    doc["experiments"].insert(doc["experiments"].begin(),
                              Json{{"name", "broken"}, {"kind", "bounds"}, {"options", {{"experiment", "holonomy"}, {"loop", "missing"}}}});
    const RunReport report = run(parse_config(doc), 1);
    REQUIRE(report.results.size() == 3);
    CHECK(report.results[0].error.has_value());
    CHECK(report.results[1].pass());
    CHECK(report.results[2].pass());
    CHECK_FALSE(report.pass());
  }
  SUBCASE("unknown scenario") {
    Json doc = minimal_config();
    doc["scenario"]["name"] = "nowhere";
    CHECK_THROWS_AS(run(parse_config(doc), 1), Error);
  }
  SUBCASE("numeric content is independent of the worker count") {
    const ExperimentConfig config = parse_config(minimal_config());
    CHECK(numeric_content(run(config, 1)) == numeric_content(run(config, 3)));
  }
}

TEST_CASE("golden report") {
  const ExperimentConfig config = load_config(kSource / "configs" / "torus_a03_full.json");
  const RunReport report = run(config, 2);
  CHECK(report.pass());
  Json expected = Json::parse(slurp(kSource / "tests" / "golden" / "torus_a03_full.json"));
  Json actual = to_json(report);
  expected.erase("timing");
  actual.erase("timing");
  std::vector<std::string> diffs;
  compare(expected, actual, "", diffs);
  for (const auto& d : diffs) MESSAGE("golden mismatch at " << d);
  CHECK(diffs.empty());
}

TEST_CASE("emitted files") {
  const ExperimentConfig config = load_config(kSource / "configs" / "torus_a03_full.json");
  const RunReport report = run(config, 2);
  const fs::path dir = scratch("emit");
  const auto written = emit(report, dir, {"struct", "table", "series"});
  CHECK(written.size() >= 2);

  SUBCASE("one table row per bound experiment") {
    int expected_rows = 0;
    for (const auto& spec : config.experiments) expected_rows += spec.kind == "bounds" || spec.kind == "rescale";
    std::ifstream in(dir / "bounds.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "experiment,name,lhs,rhs,margin,pass,tolerance,parameters");
    int rows = 0;
    while (std::getline(in, line)) rows += !line.empty();
    CHECK(rows == expected_rows);
  }
  SUBCASE("structured output round-trips") {
    const Json parsed = Json::parse(slurp(dir / "report.json"));
    CHECK(parsed == to_json(report));
    CHECK(slurp(dir / "report.json") == write_json(to_json(report)));
  }
  SUBCASE("series files are numeric tables") {
    for (const auto& path : written) {
      if (path.parent_path().filename() != "series") continue;
      std::ifstream in(path);
      std::string header;
      std::getline(in, header);
      CHECK(header.rfind("# ", 0) == 0);
    }
  }
}

TEST_CASE("deviation series") {
  Json doc = Json::parse(R"({
    "scenario": {"name": "plane_curves"},
    "experiments": [{"name": "dev", "kind": "bounds", "options": {"experiment": "deviation", "s_count": 16}}],
    "output": {"formats": ["series"]}
  })");
  const RunReport report = run(parse_config(doc), 1);
  REQUIRE(report.results.size() == 1);
  CHECK(report.results[0].pass());
  REQUIRE(report.results[0].series.size() == 1);
  const Series& s = report.results[0].series[0];
  CHECK(s.columns.size() == 3);
  CHECK(s.rows.size() == 16);
  for (std::size_t i = 1; i < s.rows.size(); ++i) CHECK(s.rows[i][0] > s.rows[i - 1][0]);

  const fs::path dir = scratch("series");
  emit(report, dir, {"series"});
  CHECK(fs::exists(dir / "series" / "dev.deviation.dat"));
  CHECK_FALSE(fs::exists(dir / "report.json"));
}

TEST_CASE("unwritable output") {
  const RunReport report = run(parse_config(minimal_config()), 1);
  try {
    emit(report, "/proc/sublab/out", {"struct"});
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("non-finite numbers are written as strings") {
  RunReport report;
  ExperimentResult r;
  r.name = "x";
  r.kind = "bounds";
  r.bounds.push_back(make_bound("b", std::numeric_limits<double>::infinity(), 1.0, 0.0, {}));
  report.results.push_back(r);
  const Json j = to_json(report);
  CHECK(j["results"][0]["bounds"][0]["lhs"] == "inf");
  CHECK_FALSE(j["pass"].get<bool>());
}

TEST_CASE("parallel_map") {
  for (int jobs : {1, 2, 7}) {
    const auto out = parallel_map<int>(100, jobs, [](std::size_t i) { return static_cast<int>(i * i); });
    REQUIRE(out.size() == 100);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  }
  try {
    parallel_map<int>(50, 4, [](std::size_t i) -> int {
      if (i == 13 || i == 40) throw std::runtime_error("fail " + std::to_string(i));
      return 0;
    });
    FAIL("expected a rethrow");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 13");
  }
  CHECK(parallel_map<int>(0, 4, [](std::size_t) { return 1; }).empty());
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  const std::string golden = (kSource / "configs" / "torus_a03_full.json").string();
  CHECK(run_cli("run " + golden + " --out " + (dir / "ok").string() + " --jobs 2") == 0);
  CHECK(fs::exists(dir / "ok" / "report.json"));
  CHECK(run_cli("run " + golden + " --out " + (dir / "table").string() + " --format table") == 0);
  CHECK(fs::exists(dir / "table" / "bounds.csv"));
  CHECK_FALSE(fs::exists(dir / "table" / "report.json"));
  CHECK(run_cli("--list-scenarios") == 0);

  Json failing = minimal_config();
  failing["experiments"][1]["options"]["loop"] = "missing";
  std::ofstream(dir / "failing.json") << failing.dump();
  CHECK(run_cli("run " + (dir / "failing.json").string() + " --out " + (dir / "f").string()) == 1);

  Json bad = minimal_config();
  bad["scenarioo"] = 1;
  std::ofstream(dir / "bad.json") << bad.dump();
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("run " + golden + " --jobs 0") != 0);
}
