#pragma once

// Configuration, the `run` pipeline and the acceptance criteria shared by the
// `suite` command and the acceptance test.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dwell/experiments.hpp"
#include "dwell/smooth.hpp"

namespace dwell {

struct SmoothSpec {
  std::string potential;  ///< cavity, harmonic, free, power or expression
  nlohmann::json params;
  double x_max = 12.0;
  double y_min = -1.6;
  double y_max = 1.6;
};

/// One identity check requested in the config. `expect` is the outcome that
/// counts as a pass: "holds" or "violated" for correspondence, "ergodic" or
/// "mixed" for weak_ergodicity, "holds" otherwise.
struct CheckSpec {
  std::string name;
  std::string expect;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::variant<TableSpec, SmoothSpec> system;
  double mass = 1.0;
  double energy = 0.5;
  std::uint64_t samples = 0;
  std::uint64_t max_iterations = kDefaultMaxIterations;
  int grid_q = 400;
  int grid_p = 400;
  double dt = kDefaultSmoothDt;
  double t_max = kDefaultSmoothTmax;
  std::uint64_t volume_samples = 2'000'000;
  unsigned workers = 0;
  std::vector<CheckSpec> checks;
  std::string output;

  bool is_billiard() const { return std::holds_alternative<TableSpec>(system); }
};

/// Validates every field. Throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
/// Reads a JSON file (comments allowed) and validates it.
RunConfig load_config(const std::filesystem::path& path);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<unsigned> workers;
  std::optional<std::string> output;
};

void apply_overrides(RunConfig& config, const RunOverrides& overrides);

/// Throws ConfigError for an unknown potential or bad parameters.
SmoothSystem build_smooth_system(const SmoothSpec& spec, double mass);

/// Builds the table or smooth system and checks that it is usable at the run
/// energy. Throws ConfigError.
void validate_system(const RunConfig& config);

struct CheckResult {
  std::string name;
  std::string expect;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  CorrespondenceReport report;
  std::optional<ReturnHistogram> histogram;
  std::optional<CoverageGrid> coverage;
  std::vector<CheckResult> checks;

  bool converged() const { return report.converged && report.censoring.reliable; }
  bool checks_passed() const;
};

RunResult execute(const RunConfig& config);

/// report.json: the report plus the check verdicts.
nlohmann::ordered_json report_document(const RunResult& result);
std::string histogram_csv(const RunResult& result);
std::string coverage_csv(const RunResult& result);
std::string summary_text(const RunResult& result);

/// Writes report.json, histogram.csv, coverage.csv, summary.txt and meta.json.
void write_outputs(const RunResult& result, const RunConfig& config, const std::filesystem::path& dir,
                   const nlohmann::ordered_json& meta);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 1;
inline constexpr int kConvergence = 2;
inline constexpr int kCheckFailed = 3;
}  // namespace exit_code

/// The `run` command. Diagnostics go to `err`.
int run_command(const std::filesystem::path& config_path, const RunOverrides& overrides, std::ostream& err);

struct CriterionResult {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string name;
  std::function<CriterionResult(double scale)> run;
};

/// The nine acceptance criteria. `scale` multiplies every sample count.
std::vector<Criterion> acceptance_criteria();

/// Runs the criteria whose name or number matches `filter` (all when empty),
/// printing one line each. Returns the number of failures, or -1 when the
/// filter matches nothing.
int run_suite(const std::string& filter, double scale, std::ostream& out);

}  // namespace dwell
