#include <CLI11.hpp>
#include <iostream>

#include "dwell/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dwell-time and return-time laboratory for open billiards and smooth waveguides"};
  app.require_subcommand(1);

  std::string config;
  dwell::RunOverrides overrides;
  std::uint64_t seed = 0, samples = 0;
  unsigned workers = 0;
  std::string out;
  CLI::App* run = app.add_subcommand("run", "Run one configuration and write its report");
  run->add_option("config", config, "Configuration file (JSON, comments allowed)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the seed");
  auto* samples_opt = run->add_option("--samples", samples, "Override the sample count");
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads (0 = all cores)");
  auto* out_opt = run->add_option("--out", out, "Output directory");

  std::string filter;
  double scale = 1.0;
  CLI::App* suite = app.add_subcommand("suite", "Run the acceptance criteria");
  suite->add_option("--filter", filter, "Run only criteria whose name contains this text, or a criterion number");
  suite->add_option("--scale", scale, "Multiply every sample count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dwell::exit_code::kConfig;
  }

  if (run->parsed()) {
    if (*seed_opt) overrides.seed = seed;
    if (*samples_opt) overrides.samples = samples;
    if (*workers_opt) overrides.workers = workers;
    if (*out_opt) overrides.output = out;
    return dwell::run_command(config, overrides, std::cerr);
  }
  const int failures = dwell::run_suite(filter, scale, std::cout);
  if (failures < 0) {
    std::cerr << "no criterion matches '" << filter << "'\n";
    return dwell::exit_code::kConfig;
  }
  std::cout << (failures == 0 ? "suite: all criteria passed" : "suite: " + std::to_string(failures) + " failed")
            << "\n";
  return failures == 0 ? dwell::exit_code::kOk : dwell::exit_code::kCheckFailed;
}
