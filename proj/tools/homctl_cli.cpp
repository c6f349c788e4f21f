#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "homctl/experiments.hpp"

namespace {

void print_summary(const homctl::RunReport& report, const std::filesystem::path& out) {
  std::printf("experiment: %s\n", homctl::to_string(report.id));
  for (const auto& run : report.runs) {
    std::printf("  %-28s rows %7zu  jumps %2zu  ||xi(0)||_d %-10.6g settled %.6g s\n",
                run.name.c_str(), run.rows, run.jumps, run.norm0, run.measured_settling_s);
  }
  std::size_t failed = 0;
  for (const auto& c : report.checks) {
    if (!c.passed) {
      ++failed;
      std::printf("  FAILED %s: %.6g (limit %.6g)\n", c.name.c_str(), c.value, c.limit);
    }
  }
  std::printf("checks: %zu/%zu passed\n", report.checks.size() - failed, report.checks.size());
  std::printf("report: %s\n", (out / "report.json").string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogeneous finite/fixed-time attitude control experiments"};
  std::string id;
  std::string config_path;
  std::string out;
  bool no_plots = false;
  std::optional<double> dt, horizon;
  std::optional<std::uint64_t> seed;

  app.add_option("experiment", id,
                 "paper, mu-sweep, iss-noise, jump-demo or impulsive-generic")
      ->required();
  app.add_option("--config", config_path, "scenario JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (default out/<experiment>)");
  app.add_flag("--no-plots", no_plots, "skip SVG plots");
  app.add_option("--dt", dt, "integration step [s]");
  app.add_option("--horizon", horizon, "simulated horizon [s]");
  app.add_option("--seed", seed, "noise / sampling seed");
  CLI11_PARSE(app, argc, argv);

  homctl::ExperimentConfig config;
  try {
    config.id = homctl::parse_experiment_id(id);
    if (!config_path.empty()) config.scenario_path = config_path;
    config.output_dir = out.empty() ? std::filesystem::path("out") / id
                                    : std::filesystem::path(out);
    config.emit_plots = !no_plots;
    config.dt_s = dt;
    config.horizon_s = horizon;
    config.seed = seed;
    const homctl::RunReport report = homctl::run(config);
    print_summary(report, config.output_dir);
    return report.passed() ? 0 : 1;
  } catch (const homctl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
