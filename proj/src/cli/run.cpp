#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "dwell/cli.hpp"
#include "dwell/errors.hpp"
#include "dwell/kernels.hpp"

namespace dwell {
namespace {

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string g6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

CheckResult evaluate_check(const CheckSpec& spec, const CorrespondenceReport& r) {
  CheckResult c{spec.name, spec.expect, false, ""};
  if (spec.name == "kac") {
    c.passed = r.kac && r.kac->passed;
    if (r.kac) c.detail = "mu(C)<n> = " + g6(r.kac->lhs.value) + ", mu(Gamma') = " + g6(r.kac->rhs.estimate.value) +
                          ", z = " + g6(r.kac->z);
  } else if (spec.name == "dwell_formula") {
    c.passed = r.dwell_formula_z && std::abs(*r.dwell_formula_z) < 3.0;
    if (r.tau_accessible)
      c.detail = "<tau> = " + g6(r.mean_tau.value) + ", (1/Omega_Sigma) dOmega'/dE = " + g6(r.tau_accessible->value) +
                 ", z = " + g6(r.dwell_formula_z.value_or(0.0));
  } else if (spec.name == "weak_ergodicity") {
    const bool ergodic = r.ergodicity && r.ergodicity->weakly_ergodic;
    c.passed = r.ergodicity && (spec.expect == "ergodic") == ergodic;
    if (r.ergodicity)
      c.detail = "coverage " + g6(r.ergodicity->fraction) + " vs threshold " + g6(r.ergodicity->threshold);
  } else {
    c.passed = (spec.expect == "holds") == r.correspondence_holds;
    c.detail = "ratio <tau_W>/<tau> = " + g6(r.wigner_ratio.value) + " +/- " + g6(r.wigner_ratio.std_error) +
               ", z = " + g6(r.correspondence_z);
  }
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

bool RunResult::checks_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

RunResult execute(const RunConfig& config) {
  RunResult out;
  if (const auto* spec = std::get_if<TableSpec>(&config.system)) {
    const BilliardTable table = build_table(*spec);
    const ParticleSpec particle = ParticleSpec::make(config.mass, config.energy);
    EnsembleParams p;
    p.samples = config.samples;
    p.max_iterations = config.max_iterations;
    p.seed = config.seed;
    p.workers = config.workers;
    p.grid_q = config.grid_q;
    p.grid_p = config.grid_p;
    EnsembleResult ens = run_scattering_ensemble(table, particle, p);
    out.report = correspondence_report(table, particle, ens);
    out.histogram = std::move(ens.histogram);
    out.coverage = ens.coverage.full();
  } else {
    const SmoothSystem system = build_smooth_system(std::get<SmoothSpec>(config.system), config.mass);
    SmoothEnsembleParams p;
    p.samples = config.samples;
    p.dt = config.dt;
    p.t_max = config.t_max;
    p.seed = config.seed;
    p.workers = config.workers;
    p.volume_samples = config.volume_samples;
    out.report = smooth_correspondence(system, config.energy, p);
  }
  for (const auto& c : config.checks) out.checks.push_back(evaluate_check(c, out.report));
  return out;
}

nlohmann::ordered_json report_document(const RunResult& result) {
  nlohmann::ordered_json j = result.report.to_json();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : result.checks)
    checks.push_back({{"name", c.name}, {"expect", c.expect}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  return j;
}

std::string histogram_csv(const RunResult& result) {
  std::string s = "n,count,P_n\n";
  if (!result.histogram) return s;
  const ReturnHistogram& h = *result.histogram;
  for (std::size_t n = 1; n < h.counts.size(); ++n) {
    if (h.counts[n] == 0) continue;
    s += std::to_string(n) + "," + std::to_string(h.counts[n]) + "," + g17(h.probability(n)) + "\n";
  }
  return s;
}

std::string coverage_csv(const RunResult& result) {
  std::string s = "q_index,p_index,visits,mean_flight_time\n";
  if (!result.coverage) return s;
  const CoverageGrid& g = *result.coverage;
  for (int iq = 0; iq < g.nq(); ++iq)
    for (int ip = 0; ip < g.np(); ++ip)
      if (const auto v = g.visits(iq, ip); v > 0)
        s += std::to_string(iq) + "," + std::to_string(ip) + "," + std::to_string(v) + "," +
             g17(g.mean_flight_time(iq, ip)) + "\n";
  return s;
}

std::string summary_text(const RunResult& result) {
  std::ostringstream s;
  s << result.report.to_text();
  if (!result.histogram) s << "note: histogram.csv and coverage.csv hold headers only for smooth systems\n";
  s << "\nchecks:\n";
  for (const auto& c : result.checks)
    s << (c.passed ? "PASS " : "FAIL ") << c.name << " (expect " << c.expect << ")"
      << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
  if (!result.converged()) s << "convergence: FAILED (see converged and censoring above)\n";
  s << "result: "
    << (!result.converged() ? "convergence failure" : result.checks_passed() ? "all checks passed" : "check failed")
    << "\n";
  return s.str();
}

void write_outputs(const RunResult& result, const RunConfig&, const std::filesystem::path& dir,
                   const nlohmann::ordered_json& meta) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report_document(result).dump(2) + "\n");
  write_file(dir / "histogram.csv", histogram_csv(result));
  write_file(dir / "coverage.csv", coverage_csv(result));
  write_file(dir / "summary.txt", summary_text(result));
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

int run_command(const std::filesystem::path& config_path, const RunOverrides& overrides, std::ostream& err) {
  RunConfig config;
  try {
    config = load_config(config_path);
    apply_overrides(config, overrides);
    if (config.output.empty()) throw ConfigError("config: no output directory (set 'output' or pass --out)");
    validate_system(config);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return exit_code::kConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  RunResult result;
  try {
    result = execute(config);
  } catch (const NotConverged& e) {
    err << "convergence failure: " << e.what() << "\n";
    return exit_code::kConvergence;
  } catch (const ExcessCensoring& e) {
    err << "convergence failure: " << e.what() << "\n";
    return exit_code::kConvergence;
  } catch (const Error& e) {
    err << "invalid system: " << e.what() << "\n";
    return exit_code::kConfig;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const int code = !result.converged()       ? exit_code::kConvergence
                   : !result.checks_passed() ? exit_code::kCheckFailed
                                             : exit_code::kOk;
  nlohmann::ordered_json meta;
  meta["tool"] = "dwell";
  meta["version"] = "1.0.0";
  meta["config"] = std::filesystem::absolute(config_path).string();
  meta["started_utc"] = started;
  meta["wall_seconds"] = seconds;
  meta["workers_requested"] = config.workers;
  meta["hardware_threads"] = std::thread::hardware_concurrency();
  meta["isa"] = std::string(kernels::to_string(kernels::active_isa()));
  meta["exit_code"] = code;
  try {
    write_outputs(result, config, config.output, meta);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return exit_code::kConfig;
  }
  return code;
}

}  // namespace dwell
