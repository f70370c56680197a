#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sublab/runner.hpp"

namespace {

void list_scenarios() {
  for (const auto& s : sublab::list_scenarios()) {
    std::cout << s.name << "  " << s.summary << "\n";
    for (const auto& p : s.params) {
      std::cout << "    " << p.name << " = " << p.default_value << "  in [" << p.lo << ", " << p.hi
                << (p.hi_inclusive ? "]" : ")") << "  " << p.doc << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sublab: numerical experiments on Riemannian submersions"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list-scenarios", list, "Print the scenario registry and exit");

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path, out_dir, format;
  int jobs = 0;
  bool run_list = false;
  run->add_option("config", config_path, "Experiment config (JSON)");
  run->add_option("--out", out_dir, "Output directory (overrides output.directory)");
  run->add_option("--jobs", jobs, "Worker threads (default: $SUBLAB_JOBS or all cores)")->check(CLI::PositiveNumber);
  run->add_option("--format", format, "Output selection")->check(CLI::IsMember({"struct", "table", "all"}));
  run->add_flag("--list-scenarios", run_list, "Print the scenario registry and exit");

  CLI11_PARSE(app, argc, argv);

  if (list || run_list) {
    list_scenarios();
    return 0;
  }
  if (!run->parsed()) {
    std::cout << app.help();
    return 2;
  }
  if (config_path.empty()) {
    std::cerr << "sublab run: a config path is required\n";
    return 2;
  }

  try {
    const sublab::ExperimentConfig config = sublab::load_config(config_path);
    std::vector<std::string> formats = config.output.formats;
    if (format == "struct") formats = {"struct"};
    else if (format == "table") formats = {"table"};
    else if (format == "all") formats = {"struct", "table", "series"};
    const std::string directory = out_dir.empty() ? config.output.directory : out_dir;

    const sublab::RunReport report = sublab::run(config, jobs);
    for (const auto& r : report.results) {
      std::printf("%-28s %-11s %s", r.name.c_str(), r.kind.c_str(), r.pass() ? "pass" : "FAIL");
      if (r.error) std::printf("  (%s)", r.error->c_str());
      for (const auto& f : r.flags) std::printf("  [%s]", f.c_str());
      std::printf("\n");
    }
    for (const auto& path : sublab::emit(report, directory, formats)) std::printf("wrote %s\n", path.c_str());
    std::printf("%s in %.2f s\n", report.pass() ? "all passed" : "FAILURES", report.wall_seconds);
    return report.pass() ? 0 : 1;
  } catch (const sublab::Error& e) {
    std::cerr << "sublab: " << e.what() << "\n";
    return 2;
  }
}
