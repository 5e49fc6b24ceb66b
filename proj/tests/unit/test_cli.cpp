#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "dwell/cli.hpp"
#include "dwell/errors.hpp"

using namespace dwell;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("dwell-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const TempDir& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir.path / name;
  std::ofstream(p) << text;
  return p;
}

json circle_config(std::uint64_t samples, int grid) {
  return {{"seed", 42},
          {"system", {{"type", "billiard"}, {"family", "circle"}, {"params", {{"radius", 1.0}, {"opening_width", 0.2}}}}},
          {"simulation", {{"samples", samples}, {"grid", {{"q", grid}, {"p", grid}}}}}};
}

json smooth_config(double energy) {
  return {{"seed", 3},
          {"system", {{"type", "smooth"}, {"potential", "cavity"}, {"params", {{"g", 0.0}}},
                      {"box", {{"x_max", 12.0}, {"y_min", -1.2}, {"y_max", 1.2}}}}},
          {"particle", {{"energy", energy}}},
          {"simulation", {{"samples", 16}, {"volume_samples", 100000}}}};
}

void check_rejected(const json& j, const std::string& fragment) {
  try {
    RunConfig c = parse_config(j);
    validate_system(c);
    FAIL("accepted: ", j.dump());
  } catch (const ConfigError& e) {
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, std::string(e.what()));
  }
}

int run(const fs::path& config, const RunOverrides& o, std::string* err = nullptr) {
  std::ostringstream s;
  const int code = run_command(config, o, s);
  if (err) *err = s.str();
  return code;
}

}  // namespace

TEST_CASE("valid config and defaults") {
  const RunConfig c = parse_config(circle_config(1000, 64));
  CHECK(c.seed == 42);
  CHECK(c.is_billiard());
  CHECK(c.samples == 1000);
  CHECK(c.grid_q == 64);
  CHECK(c.mass == 1.0);
  CHECK(c.energy == 0.5);
  CHECK(c.max_iterations == kDefaultMaxIterations);
  CHECK(c.workers == 0);
  REQUIRE(c.checks.size() == 3);
  CHECK(c.checks[2].name == "correspondence");
  CHECK(c.checks[2].expect == "holds");
  CHECK_NOTHROW(validate_system(c));

  json j = circle_config(1000, 64);
  j["simulation"]["samples"] = 1e6;
  CHECK(parse_config(j).samples == 1'000'000);

  const RunConfig s = parse_config(smooth_config(0.5));
  CHECK_FALSE(s.is_billiard());
  CHECK(s.dt == kDefaultSmoothDt);
  CHECK(s.volume_samples == 100000);
  CHECK_NOTHROW(validate_system(s));
}

TEST_CASE("invalid configs are rejected with the key named") {
  json j = circle_config(1000, 64);
  j.erase("seed");
  check_rejected(j, "'seed' is required");

  j = circle_config(1000, 64);
  j["seed"] = -1;
  check_rejected(j, "seed");
  j["seed"] = 1.5;
  check_rejected(j, "seed");

  j = circle_config(1000, 64);
  j["sead"] = 1;
  check_rejected(j, "'sead' is not a recognised key");

  j = circle_config(1000, 64);
  j["simulation"]["samples"] = 0;
  check_rejected(j, "simulation.samples");

  j = circle_config(1000, 63);
  check_rejected(j, "even");

  j = circle_config(1000, 64);
  j["simulation"]["dt"] = 0.1;
  check_rejected(j, "simulation.dt");

  j = circle_config(1000, 64);
  j["system"]["params"]["radius"] = "one";
  check_rejected(j, "system.params.radius");

  j = circle_config(1000, 64);
  j["system"]["params"]["radious"] = 1.0;
  check_rejected(j, "unknown parameter 'radious'");

  j = circle_config(1000, 64);
  j["system"]["family"] = "triangle";
  check_rejected(j, "unknown table family");

  j = circle_config(1000, 64);
  j["system"]["params"]["opening_width"] = 0.0;
  check_rejected(j, "no opening");

  j = circle_config(1000, 64);
  j["system"]["params"]["opening_width"] = 5.0;
  check_rejected(j, "config:");

  j = circle_config(1000, 64);
  j["system"]["type"] = "quantum";
  check_rejected(j, "system.type");

  j = circle_config(1000, 64);
  j["particle"] = {{"mass", -1.0}};
  check_rejected(j, "particle.mass");

  j = circle_config(1000, 64);
  j["checks"] = {"kac", "ergodicity"};
  check_rejected(j, "unknown check 'ergodicity'");

  j = circle_config(1000, 64);
  j["checks"] = {{{"name", "correspondence"}, {"expect", "maybe"}}};
  check_rejected(j, "invalid expectation");

  j = smooth_config(0.5);
  j["checks"] = {"kac"};
  check_rejected(j, "unknown check 'kac'");
}

TEST_CASE("smooth systems are validated before any computation") {
  check_rejected(smooth_config(-0.1), "no open channel");

  json j = smooth_config(0.5);
  j["system"]["box"]["y_max"] = 0.8;
  check_rejected(j, "reaches the declared box");

  j = smooth_config(0.5);
  j["system"]["potential"] = "morse";
  check_rejected(j, "unknown potential 'morse'");

  j = smooth_config(0.5);
  j["system"]["params"]["gg"] = 0.1;
  check_rejected(j, "system.params.gg");

  j = smooth_config(0.5);
  j["system"]["params"]["g"] = 1.5;
  check_rejected(j, "g must lie in");

  j = smooth_config(0.5);
  j["system"]["potential"] = "expression";
  j["system"]["params"] = {{"V", "0.5*y^2 + 0.02*((x + sqrt(x^2))/2)^4"},
                           {"dV_dx", "0.08*((x + sqrt(x^2))/2)^3"},
                           {"dV_dy", "y"},
                           {"lower_bound", 0.0}};
  j["system"]["box"]["x_max"] = 4.0;
  CHECK_NOTHROW(validate_system(parse_config(j)));

  j["system"]["params"]["dV_dx"] = "0.02*((x + sqrt(x^2))/2)^3";
  check_rejected(j, "gradient disagrees");

  j["system"]["params"]["dV_dx"] = "0.08*((x + sqrt(x^2))/2)^";
  check_rejected(j, "dV_dx");
  j["system"]["params"]["dV_dx"] = "0.08*((x + sqrt(x^2))/2)^3";
  j["system"]["params"].erase("lower_bound");
  check_rejected(j, "lower_bound");

  j = smooth_config(0.5);
  j["system"]["potential"] = "expression";
  j["system"]["params"] = {{"V", "0.5*y^2 + 0.01*x"}, {"dV_dx", "0.01"}, {"dV_dy", "y"}, {"lower_bound", -1.0}};
  check_rejected(j, "depends on x for x <= 0");
}

TEST_CASE("config files allow comments and report parse errors") {
  TempDir dir;
  const auto good = write_config(dir, "good.json", R"(// comment
{
  "seed": 1, /* block */
  "system": {"type": "billiard", "family": "rectangle",
             "params": {"width": 1, "height": 1, "opening_width": 0.2}},
  "simulation": {"samples": 10}
})");
  CHECK(load_config(good).seed == 1);
  const auto bad = write_config(dir, "bad.json", "{\"seed\": 1,,}");
  CHECK_THROWS_AS(load_config(bad), ConfigError);
  CHECK_THROWS_AS(load_config(dir.path / "missing.json"), ConfigError);
}

TEST_CASE("config errors exit 1 and write nothing") {
  TempDir dir;
  RunOverrides o;
  o.output = (dir.path / "out").string();
  std::string err;

  const auto malformed = write_config(dir, "malformed.json", "{ \"seed\": 4, \"system\": ");
  CHECK(run(malformed, o, &err) == exit_code::kConfig);
  CHECK(!err.empty());
  CHECK_FALSE(fs::exists(dir.path / "out"));

  json j = circle_config(100, 64);
  j["system"]["params"]["opening_width"] = 0.0;
  CHECK(run(write_config(dir, "closed.json", j.dump()), o) == exit_code::kConfig);
  CHECK_FALSE(fs::exists(dir.path / "out"));

  CHECK(run(write_config(dir, "closed-channel.json", smooth_config(-1.0).dump()), o) == exit_code::kConfig);
  CHECK_FALSE(fs::exists(dir.path / "out"));

  RunOverrides no_out;
  CHECK(run(write_config(dir, "no-out.json", circle_config(100, 64).dump()), no_out, &err) == exit_code::kConfig);
  CHECK(err.find("output") != std::string::npos);

  o.samples = 0;
  CHECK(run(write_config(dir, "zero.json", circle_config(100, 64).dump()), o) == exit_code::kConfig);
  CHECK_FALSE(fs::exists(dir.path / "out"));
}

TEST_CASE("run writes deterministic outputs with the documented schema") {
  TempDir dir;
  const auto config = write_config(dir, "circle.json", circle_config(100'000, 100).dump());
  RunOverrides a, b;
  a.workers = 1;
  a.output = (dir.path / "a").string();
  b.workers = 3;
  b.output = (dir.path / "b").string();
  CHECK(run(config, a) == exit_code::kOk);
  CHECK(run(config, b) == exit_code::kOk);
  for (const char* f : {"report.json", "histogram.csv", "coverage.csv", "summary.txt"})
    CHECK_MESSAGE(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f), f);

  const std::string hist = slurp(dir.path / "a" / "histogram.csv");
  CHECK(hist.rfind("n,count,P_n\n", 0) == 0);
  const std::string cov = slurp(dir.path / "a" / "coverage.csv");
  CHECK(cov.rfind("q_index,p_index,visits,mean_flight_time\n", 0) == 0);

  const json report = json::parse(slurp(dir.path / "a" / "report.json"));
  CHECK(report["seed"] == 42);
  CHECK(report["samples"] == 100'000);
  CHECK(report["mean_n"]["provenance"] == "estimated");
  CHECK(report["tau_geometric"]["provenance"] == "analytic");
  CHECK(report["checks"].size() == 3);
  CHECK(report.dump().find("utc") == std::string::npos);

  const json meta = json::parse(slurp(dir.path / "a" / "meta.json"));
  CHECK(meta.contains("started_utc"));
  CHECK(meta.contains("wall_seconds"));
  CHECK(meta["exit_code"] == 0);

  std::uint64_t rows = 0, total = 0;
  std::istringstream lines(hist);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    ++rows;
    total += std::stoull(line.substr(line.find(',') + 1));
  }
  CHECK(rows > 10);
  CHECK(total + report["censoring"]["censored"].get<std::uint64_t>() + report["corner_discarded"].get<std::uint64_t>() ==
        100'000);
  CHECK(slurp(dir.path / "a" / "summary.txt").find("result: all checks passed") != std::string::npos);
}

TEST_CASE("overrides replace config values") {
  TempDir dir;
  const auto config = write_config(dir, "circle.json", circle_config(100'000, 100).dump());
  RunOverrides o;
  o.seed = 9;
  o.samples = 5000;
  o.output = (dir.path / "o").string();
  run(config, o);
  const json report = json::parse(slurp(dir.path / "o" / "report.json"));
  CHECK(report["seed"] == 9);
  CHECK(report["samples"] == 5000);
}

TEST_CASE("unconverged box counting exits 2 with outputs written") {
  TempDir dir;
  const auto config = write_config(dir, "sparse.json", circle_config(20'000, 400).dump());
  RunOverrides o;
  o.output = (dir.path / "s").string();
  CHECK(run(config, o) == exit_code::kConvergence);
  CHECK(slurp(dir.path / "s" / "summary.txt").find("result: convergence failure") != std::string::npos);
  CHECK(json::parse(slurp(dir.path / "s" / "report.json"))["converged"] == false);
}

TEST_CASE("mushroom summary reports the violated correspondence") {
  TempDir dir;
  json j = {{"seed", 11},
            {"system", {{"type", "billiard"}, {"family", "mushroom"},
                        {"params", {{"cap_radius", 1.0}, {"stem_width", 1.0}, {"stem_depth", 1.0},
                                    {"opening_width", 1.0}}}}},
            {"simulation", {{"samples", 200'000}, {"grid", {{"q", 100}, {"p", 100}}}}},
            {"checks", {"correspondence"}}};
  RunOverrides o;
  o.output = (dir.path / "m").string();
  CHECK(run(write_config(dir, "m.json", j.dump()), o) == exit_code::kCheckFailed);
  const std::string summary = slurp(dir.path / "m" / "summary.txt");
  CHECK(summary.find("correspondence: VIOLATED (ratio <tau_W>/<tau> = 1.3") != std::string::npos);
  CHECK(summary.find("z = ") != std::string::npos);
  CHECK(summary.find("FAIL correspondence (expect holds)") != std::string::npos);

  j["checks"] = {{{"name", "correspondence"}, {"expect", "violated"}}, {{"name", "weak_ergodicity"}, {"expect", "mixed"}}};
  o.output = (dir.path / "m2").string();
  CHECK(run(write_config(dir, "m2.json", j.dump()), o) == exit_code::kOk);
}

TEST_CASE("smooth run writes header-only CSVs") {
  TempDir dir;
  RunOverrides o;
  o.output = (dir.path / "s").string();
  const int code = run(write_config(dir, "s.json", smooth_config(0.5).dump()), o);
  CHECK((code == exit_code::kOk || code == exit_code::kCheckFailed));
  CHECK(slurp(dir.path / "s" / "histogram.csv") == "n,count,P_n\n");
  CHECK(slurp(dir.path / "s" / "coverage.csv") == "q_index,p_index,visits,mean_flight_time\n");
  const json report = json::parse(slurp(dir.path / "s" / "report.json"));
  CHECK(report["mean_n"].is_null());
  CHECK(report["system"] == "separable");
}

TEST_CASE("suite filter selects criteria") {
  std::ostringstream out;
  CHECK(run_suite("sphere", 0.1, out) == 0);
  CHECK(out.str().find("criterion 2 sphere_bounce_time: PASS") != std::string::npos);
  CHECK(out.str().find("criterion 1") == std::string::npos);
  std::ostringstream none;
  CHECK(run_suite("nothing-matches", 1.0, none) == -1);
  std::ostringstream by_number;
  CHECK(run_suite("6", 0.1, by_number) == 0);
  CHECK(by_number.str().find("semiclassical") != std::string::npos);
}
