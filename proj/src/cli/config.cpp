#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dwell/cli.hpp"
#include "dwell/errors.hpp"

namespace dwell {
namespace {

using nlohmann::json;

// Typed access to one JSON object; every key must be consumed or finish() throws.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be an object");
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& what) {
    throw ConfigError("config: '" + key + "' " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(name(key), "is required");
    }
    const json& v = raw(key);
    if (!v.is_number()) fail(name(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(name(key), "must be finite");
    return x;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) fail(name(key), "must be positive");
    return x;
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                      std::uint64_t minimum = 0) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(name(key), "is required");
    }
    const json& v = raw(key);
    if (!v.is_number()) fail(name(key), "must be a non-negative integer");
    const double x = v.get<double>();
    if (!(x >= 0.0) || x != std::floor(x) || x > 9.0e18) fail(name(key), "must be a non-negative integer");
    const auto n = v.is_number_unsigned() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(x);
    if (n < minimum) fail(name(key), "must be at least " + std::to_string(minimum));
    return n;
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(name(key), "is required");
    }
    const json& v = raw(key);
    if (!v.is_string()) fail(name(key), "must be a string");
    return v.get<std::string>();
  }

  ObjectReader object(const std::string& key) { return ObjectReader(raw(key), name(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail(name(key), "is not a recognised key");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

TableSpec parse_table(ObjectReader& sys) {
  TableSpec spec;
  spec.family = sys.string("family");
  ObjectReader params = sys.object("params");
  for (const auto& [key, value] : sys.raw("params").items()) spec.params[key] = params.number(key);
  return spec;
}

SmoothSpec parse_smooth(ObjectReader& sys) {
  SmoothSpec spec;
  spec.potential = sys.string("potential");
  spec.params = sys.has("params") ? sys.raw("params") : json::object();
  if (!spec.params.is_object()) ObjectReader::fail(sys.name("params"), "must be an object");
  if (sys.has("box")) {
    ObjectReader box = sys.object("box");
    spec.x_max = box.positive("x_max", spec.x_max);
    spec.y_min = box.number("y_min", spec.y_min);
    spec.y_max = box.number("y_max", spec.y_max);
    box.finish();
    if (!(spec.y_max > spec.y_min)) ObjectReader::fail(sys.name("box"), "needs y_max > y_min");
  }
  return spec;
}

CheckSpec parse_check(const json& j, const std::string& path, bool billiard) {
  CheckSpec c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
  } else {
    ObjectReader r(j, path);
    c.name = r.string("name");
    c.expect = r.string("expect", "");
    r.finish();
  }
  const std::set<std::string> billiard_checks{"kac", "dwell_formula", "weak_ergodicity", "correspondence"};
  if (billiard ? !billiard_checks.count(c.name) : c.name != "correspondence")
    ObjectReader::fail(path, "names unknown check '" + c.name + "' for this system type");
  if (c.expect.empty()) c.expect = c.name == "weak_ergodicity" ? "ergodic" : "holds";
  const bool ok = c.name == "correspondence"    ? (c.expect == "holds" || c.expect == "violated")
                  : c.name == "weak_ergodicity" ? (c.expect == "ergodic" || c.expect == "mixed")
                                                : c.expect == "holds";
  if (!ok) ObjectReader::fail(path, "has invalid expectation '" + c.expect + "' for check '" + c.name + "'");
  return c;
}

double param(const json& params, const std::string& key, double fallback, std::set<std::string>& used) {
  used.insert(key);
  if (!params.contains(key)) return fallback;
  const json& v = params.at(key);
  if (!v.is_number()) ObjectReader::fail("system.params." + key, "must be a number");
  return v.get<double>();
}

std::string string_param(const json& params, const std::string& key, std::set<std::string>& used) {
  used.insert(key);
  if (!params.contains(key)) ObjectReader::fail("system.params." + key, "is required");
  const json& v = params.at(key);
  if (!v.is_string()) ObjectReader::fail("system.params." + key, "must be a string");
  return v.get<std::string>();
}

Expression expression_param(const json& params, const std::string& key, std::set<std::string>& used) {
  const std::string text = string_param(params, key, used);
  try {
    return Expression::parse(text);
  } catch (const InvalidParams& e) {
    ObjectReader::fail("system.params." + key, std::string("is not a valid expression: ") + e.what());
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  ObjectReader root(j, "");
  RunConfig c;
  c.seed = root.count("seed");

  ObjectReader sys = root.object("system");
  const std::string type = sys.string("type");
  if (type == "billiard") c.system = parse_table(sys);
  else if (type == "smooth") c.system = parse_smooth(sys);
  else ObjectReader::fail("system.type", "must be 'billiard' or 'smooth'");
  sys.finish();

  if (root.has("particle")) {
    ObjectReader particle = root.object("particle");
    c.mass = particle.positive("mass", 1.0);
    c.energy = particle.number("energy", 0.5);
    particle.finish();
  }
  if (c.is_billiard() && !(c.energy > 0.0)) ObjectReader::fail("particle.energy", "must be positive for a billiard");

  ObjectReader sim = root.object("simulation");
  c.samples = sim.count("samples", std::nullopt, 1);
  c.workers = static_cast<unsigned>(sim.count("workers", 0));
  if (c.is_billiard()) {
    c.max_iterations = sim.count("max_iterations", kDefaultMaxIterations, 1);
    if (sim.has("grid")) {
      ObjectReader grid = sim.object("grid");
      c.grid_q = static_cast<int>(grid.count("q", 400, 2));
      c.grid_p = static_cast<int>(grid.count("p", 400, 2));
      grid.finish();
      if (c.grid_q % 2 || c.grid_p % 2 || c.grid_q > 8192 || c.grid_p > 8192)
        ObjectReader::fail("simulation.grid", "sides must be even and at most 8192");
    }
  } else {
    c.dt = sim.positive("dt", kDefaultSmoothDt);
    c.t_max = sim.positive("t_max", kDefaultSmoothTmax);
    c.volume_samples = sim.count("volume_samples", 2'000'000, 1);
  }
  sim.finish();

  if (root.has("checks")) {
    const json& checks = root.raw("checks");
    if (!checks.is_array()) ObjectReader::fail("checks", "must be an array");
    for (std::size_t i = 0; i < checks.size(); ++i)
      c.checks.push_back(parse_check(checks[i], "checks[" + std::to_string(i) + "]", c.is_billiard()));
  } else if (c.is_billiard()) {
    c.checks = {{"kac", "holds"}, {"dwell_formula", "holds"}, {"correspondence", "holds"}};
  } else {
    c.checks = {{"correspondence", "holds"}};
  }
  c.output = root.string("output", "");
  root.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void apply_overrides(RunConfig& config, const RunOverrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.samples) {
    if (*o.samples == 0) throw ConfigError("--samples must be positive");
    config.samples = *o.samples;
  }
  if (o.workers) config.workers = *o.workers;
  if (o.output) config.output = *o.output;
}

SmoothSystem build_smooth_system(const SmoothSpec& spec, double mass) {
  std::set<std::string> used;
  const json& p = spec.params;
  SmoothSystem s;
  s.mass = mass;
  s.x_max = spec.x_max;
  s.y_min = spec.y_min;
  s.y_max = spec.y_max;
  try {
    if (spec.potential == "cavity") {
      CavityParams c;
      c.omega0 = param(p, "omega0", c.omega0, used);
      c.g = param(p, "g", c.g, used);
      c.x_c = param(p, "x_c", c.x_c, used);
      c.sigma = param(p, "sigma", c.sigma, used);
      c.u0 = param(p, "u0", c.u0, used);
      c.x_w = param(p, "x_w", c.x_w, used);
      c.lambda = param(p, "lambda", c.lambda, used);
      s.potential = std::make_shared<CavityPotential>(c);
    } else if (spec.potential == "harmonic") {
      s.potential = std::make_shared<HarmonicChannel>(param(p, "omega", 1.0, used), mass);
    } else if (spec.potential == "free") {
      s.potential = std::make_shared<FreePotential>();
    } else if (spec.potential == "power") {
      const double n = param(p, "n", 4.0, used);
      if (n != std::floor(n)) ObjectReader::fail("system.params.n", "must be an integer");
      s.potential = std::make_shared<PowerWell>(param(p, "v0", 1.0, used), param(p, "a", 1.0, used),
                                                static_cast<int>(n));
    } else if (spec.potential == "expression") {
      used.insert("lower_bound");
      if (!p.contains("lower_bound") || !p.at("lower_bound").is_number())
        ObjectReader::fail("system.params.lower_bound", "is required (a number no larger than V in the box)");
      s.potential = std::make_shared<ExpressionPotential>(
          expression_param(p, "V", used), expression_param(p, "dV_dx", used), expression_param(p, "dV_dy", used),
          p.at("lower_bound").get<double>());
    } else {
      ObjectReader::fail("system.potential", "names unknown potential '" + spec.potential + "'");
    }
  } catch (const InvalidParams& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [key, value] : p.items())
    if (!used.count(key)) ObjectReader::fail("system.params." + key, "is not a parameter of " + spec.potential);
  return s;
}

void validate_system(const RunConfig& config) {
  try {
    if (const auto* t = std::get_if<TableSpec>(&config.system)) {
      const BilliardTable table = build_table(*t);
      if (table.openings().empty()) throw ConfigError("config: the table has no opening (opening_width = 0)");
      ParticleSpec::make(config.mass, config.energy);
      return;
    }
    const SmoothSystem s = build_smooth_system(std::get<SmoothSpec>(config.system), config.mass);
    if (waveguide_deviation(s) > 1e-12)
      throw ConfigError("config: the potential depends on x for x <= 0 (the waveguide must be free there)");
    if (!(omega_sigma_smooth(s, config.energy).value > 0.0))
      throw ConfigError("config: no open channel at E = " + std::to_string(config.energy));
    if (confinement_violation(s, config.energy) > 0.0)
      throw ConfigError("config: the region V <= E reaches the declared box; enlarge system.box");
    const double mismatch = gradient_mismatch(*s.potential, s);
    if (mismatch > 1e-5) {
      std::ostringstream msg;
      msg << "config: the gradient disagrees with finite differences of V (relative mismatch " << mismatch << ")";
      throw ConfigError(msg.str());
    }
  } catch (const InvalidParams& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace dwell
