#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include "dwell/cli.hpp"
#include "dwell/errors.hpp"

namespace dwell {
namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t scaled(double base, double scale) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(base * scale)));
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

double zscore(double value, double expected, double sigma) { return (value - expected) / sigma; }

// Ensembles shared between criteria within one process.
const EnsembleResult& cached_ensemble(const std::string& key, const BilliardTable& table, const ParticleSpec& particle,
                                      std::uint64_t samples, std::uint64_t seed) {
  static std::map<std::string, std::unique_ptr<EnsembleResult>> cache;
  const std::string full_key = key + "/" + std::to_string(samples) + "/" + std::to_string(seed);
  auto& slot = cache[full_key];
  if (!slot) {
    EnsembleParams p;
    p.samples = samples;
    p.seed = seed;
    slot = std::make_unique<EnsembleResult>(run_scattering_ensemble(table, particle, p));
  }
  return *slot;
}

const ParticleSpec& unit_particle() {
  static const ParticleSpec p = ParticleSpec::make(1.0, 0.5);
  return p;
}

CriterionResult bounce_time_law(double scale) {
  struct Case {
    const char* name;
    BilliardTable table;
    double expected;
  };
  const Case cases[] = {
      {"circle", make_circle(1.0, 0.0), kPi / 2.0},
      {"square", make_rectangle(1.0, 1.0, 0.0), kPi / 4.0},
      {"stadium", make_stadium(2.0, 1.0, 0.0), kPi * (kPi + 4.0) / (2.0 * kPi + 4.0)},
  };
  CriterionResult r{true, ""};
  for (const auto& c : cases) {
    const BounceTime b = bounce_time_closed(c.table, unit_particle(), scaled(1e6, scale), 101, 0);
    const double z = zscore(b.monte_carlo.value, c.expected, b.monte_carlo.std_error);
    r.passed = r.passed && std::abs(z) < 3.0;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + c.name + " " + fmt(b.monte_carlo.value) + " vs " +
                fmt(c.expected) + " (z = " + fmt(z, 3) + ")";
  }
  return r;
}

CriterionResult sphere_bounce(double scale) {
  const SphereBounceTime s = sphere_bounce_time(1.0, unit_particle(), scaled(1e6, scale), 102);
  const double z = zscore(s.monte_carlo.value, 4.0 / 3.0, s.monte_carlo.std_error);
  return {std::abs(z) < 3.0, "mean chord " + fmt(s.monte_carlo.value) + " +/- " + fmt(s.monte_carlo.std_error, 3) +
                                 " vs 4/3 (z = " + fmt(z, 3) + ")"};
}

CriterionResult kac_identity(double scale) {
  CriterionResult r{true, ""};
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SampleStream rng(103, trial);
    const auto m = 1 + static_cast<std::uint32_t>(rng.uniform() * 5000);
    std::vector<std::uint32_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::uint32_t i = m - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<std::uint32_t>(rng.uniform() * (i + 1))]);
    std::vector<std::uint32_t> section;
    for (std::uint32_t i = 0; i < m; ++i)
      if (rng.uniform() < 0.02) section.push_back(i);
    if (section.empty()) section.push_back(0);
    const PermutationKac k = kac_on_permutation(perm, section, 1.0 / 1024.0);
    exact += k.lhs == k.rhs && k.lhs_steps == k.rhs_cells;
  }
  r.passed = exact == 100;
  r.detail = "permutations exact " + std::to_string(exact) + "/100";

  const std::uint64_t n = scaled(1e6, scale);
  const std::pair<const char*, BilliardTable> tables[] = {{"circle", make_circle(1.0, 0.2)},
                                                           {"stadium", make_stadium(2.0, 1.0, 0.4)}};
  for (const auto& [name, table] : tables) {
    const EnsembleResult& e = cached_ensemble(name, table, unit_particle(), n, 104);
    const KacComparison k = kac_check(e, table, unit_particle());
    r.passed = r.passed && k.passed;
    r.detail += std::string("; ") + name + " mu(C)<n> = " + fmt(k.lhs.value) + ", mu(Gamma') = " +
                fmt(k.rhs.estimate.value) + " (z = " + fmt(k.z, 3) + ")";
  }
  return r;
}

CriterionResult weak_ergodicity_correspondence(double scale) {
  const double radius = 1.0, w = 0.2, v = unit_particle().speed;
  const double alpha = std::asin(w / (2.0 * radius));
  const double perimeter = 2.0 * radius * (kPi - alpha) + w;
  const double area = radius * radius * (kPi - alpha + std::sin(alpha) * std::cos(alpha));
  const double n_expected = perimeter / w;
  const double tau_expected = kPi * area / (v * w);

  const BilliardTable table = make_circle(radius, w);
  const EnsembleResult& e = cached_ensemble("circle", table, unit_particle(), scaled(1e6, scale), 104);
  const double dn = std::abs(e.mean_n.value - n_expected) / n_expected;
  const double dt = std::abs(e.mean_tau.value - tau_expected) / tau_expected;
  return {dn < 0.02 && dt < 0.02, "<n> = " + fmt(e.mean_n.value) + " vs " + fmt(n_expected) + " (" +
                                      fmt(100 * dn, 3) + "%); <tau> = " + fmt(e.mean_tau.value) + " vs " +
                                      fmt(tau_expected) + " (" + fmt(100 * dt, 3) + "%)"};
}

CriterionResult mixed_phase_space(double scale) {
  const BilliardTable table = make_mushroom(1.0, 1.0, 1.0, 1.0);
  const EnsembleResult& e = cached_ensemble("mushroom", table, unit_particle(), scaled(1e6, scale), 105);
  const CorrespondenceReport rep = correspondence_report(table, unit_particle(), e);
  const ErgodicityVerdict& erg = *rep.ergodicity;
  const double gap = (1.0 - erg.fraction) / erg.sigma;
  const double dwell_z = rep.dwell_formula_z.value_or(1e9);
  const double excess = (rep.wigner_ratio.value - 1.0) / rep.wigner_ratio.std_error;
  return {gap >= 5.0 && std::abs(dwell_z) < 3.0 && excess >= 5.0,
          "coverage " + fmt(erg.fraction) + " (1 - f = " + fmt(gap, 3) + " sigma); <tau> = " +
              fmt(rep.mean_tau.value) + " vs (1/Omega_Sigma) dOmega'/dE = " + fmt(rep.tau_accessible->value) +
              " (z = " + fmt(dwell_z, 3) + "); <tau_W>/<tau> = " + fmt(rep.wigner_ratio.value) + " +/- " +
              fmt(rep.wigner_ratio.std_error, 3) + " (" + fmt(excess, 3) + " sigma above 1)"};
}

CriterionResult semiclassical_h_independence(double scale) {
  const BilliardTable table = make_circle(1.0, 0.2);
  const EnsembleResult& e = cached_ensemble("circle", table, unit_particle(), scaled(1e6, scale), 104);
  const ShellVolumes volumes = shell_volumes(table, unit_particle(), e.coverage);
  const SemiclassicalBundle a = semiclassical_bundle(volumes, 1.0, 2);
  const SemiclassicalBundle b = semiclassical_bundle(volumes, 1.0e-4, 2);
  const double rel = std::abs(a.wigner_from_weyl - b.wigner_from_weyl) / std::abs(a.wigner_from_weyl);
  return {rel <= 1e-12, "<tau_W> = " + fmt(a.wigner_from_weyl, 15) + " (hbar = 1) vs " +
                            fmt(b.wigner_from_weyl, 15) + " (hbar = 1e-4), relative difference " + fmt(rel, 3)};
}

CriterionResult measure_preservation(double scale) {
  std::vector<std::pair<std::string, BilliardTable>> tables;
  tables.emplace_back("circle", make_circle(1.0, 0.2));
  tables.emplace_back("rectangle", make_rectangle(1.0, 1.0, 0.2));
  tables.emplace_back("stadium", make_stadium(2.0, 1.0, 0.4));
  tables.emplace_back("mushroom", make_mushroom(1.0, 1.0, 1.0, 1.0));
  tables.emplace_back("cosine", make_cosine_channel(6.0, 1.0, 0.8, 0.6));
  const ParticleSpec& particle = unit_particle();
  const auto n = static_cast<int>(scaled(1000, scale));
  CriterionResult r{true, ""};
  for (const auto& [name, table] : tables) {
    int usable = 0, good = 0;
    for (int i = 0; i < n; ++i) {
      SampleStream rng(106, static_cast<std::uint64_t>(i));
      const BoundaryPhasePoint x{rng.uniform() * table.perimeter(), rng.uniform(-0.99, 0.99) * particle.p_max};
      const JacobianResult j = jacobian_check(x, table, particle, 1e-6);
      if (!j.usable) continue;
      ++usable;
      good += std::abs(j.det - 1.0) < 1e-5;
    }
    const double frac = usable ? static_cast<double>(good) / usable : 0.0;
    r.passed = r.passed && frac >= 0.99;
    r.detail += (r.detail.empty() ? "" : "; ") + name + " " + std::to_string(good) + "/" + std::to_string(usable);
  }
  return r;
}

CriterionResult smooth_volumes(double scale) {
  CriterionResult r{true, ""};
  const double e = 0.5;

  SmoothSystem harmonic;
  harmonic.potential = std::make_shared<HarmonicChannel>(1.0, 1.0);
  harmonic.x_max = 1.0;
  harmonic.y_min = -2.0;
  harmonic.y_max = 2.0;
  const double area = 2.0 * kPi * e / 1.0;
  const MeasureEstimate q = omega_sigma_smooth(harmonic, e);
  const MeasureEstimate mc = omega_sigma_mc(harmonic, e, scaled(1e6, scale), 107);
  const double zq = zscore(mc.value, q.value, mc.std_error);
  const bool quad_ok = std::abs(q.value - area) <= std::max(3.0 * q.std_error, 1e-10 * area);
  r.passed = quad_ok && std::abs(zq) < 3.0;
  r.detail = "Omega_Sigma quadrature " + fmt(q.value, 12) + " vs 2 pi E / omega = " + fmt(area, 12) + ", MC " +
             fmt(mc.value) + " (z = " + fmt(zq, 3) + ")";

  // Separable cavity, m = omega0 = 1: the p and y integrals are closed form,
  // Omega = 2 pi (4 sqrt 2 / 3) * integral of (E - U(x))^(3/2) dx.
  SmoothSystem sep = separable_system();
  const auto& cavity = dynamic_cast<const CavityPotential&>(*sep.potential);
  const double reduced =
      2.0 * kPi * 4.0 * std::sqrt(2.0) / 3.0 *
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) { return std::pow(std::max(0.0, e - cavity.cap(x)), 1.5); }, 0.0, sep.x_max, 15, 1e-13);
  const SmoothVolumes v = omega_smooth(sep, e, scaled(2e6, scale), 108, 0.01, 0);
  const double zs = zscore(v.omega.value, reduced, v.omega.std_error);
  r.passed = r.passed && std::abs(zs) < 3.0;
  r.detail += "; separable Omega " + fmt(v.omega.value) + " vs reduced quadrature " + fmt(reduced) + " (z = " +
              fmt(zs, 3) + ")";

  const EnergyDrift drift =
      energy_drift({5.0, 0.3, 0.05, 0.8}, *default_cavity_system().potential, 1.0, kDefaultSmoothDt, 1'000'000, 100'000);
  r.passed = r.passed && drift.secular < 1e-8;
  r.detail += "; drift over 1e6 steps " + fmt(drift.secular, 3) + " (instantaneous " + fmt(drift.max_deviation, 3) +
              ")";
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CriterionResult determinism(double scale) {
  const auto base = std::filesystem::temp_directory_path() / ("dwell-determinism-" + std::to_string(::getpid()));
  std::filesystem::create_directories(base);
  struct Case {
    const char* name;
    nlohmann::json config;
    unsigned workers_a, workers_b;
  };
  const Case cases[] = {
      {"circle",
       {{"seed", 42},
        {"system", {{"type", "billiard"}, {"family", "circle"}, {"params", {{"radius", 1.0}, {"opening_width", 0.2}}}}},
        {"simulation", {{"samples", scaled(1e5, scale)}}}},
       1, 4},
      {"separable",
       {{"seed", 43},
        {"system", {{"type", "smooth"}, {"potential", "cavity"}, {"params", {{"g", 0.0}}},
                    {"box", {{"x_max", 12.0}, {"y_min", -1.2}, {"y_max", 1.2}}}}},
        {"simulation", {{"samples", scaled(48, scale)}, {"volume_samples", scaled(2e5, scale)}}}},
       1, 3},
  };
  CriterionResult r{true, ""};
  std::ostringstream sink;
  for (const auto& c : cases) {
    const auto config_path = base / (std::string(c.name) + ".json");
    std::ofstream(config_path) << c.config.dump(2);
    std::string reports[2];
    for (int k = 0; k < 2; ++k) {
      RunOverrides o;
      o.workers = k == 0 ? c.workers_a : c.workers_b;
      o.output = (base / (std::string(c.name) + "-" + std::to_string(k))).string();
      const int code = run_command(config_path, o, sink);
      if (code == exit_code::kConfig) {
        r.passed = false;
        r.detail += std::string(c.name) + ": run failed; ";
      }
      reports[k] = slurp(std::filesystem::path(*o.output) / "report.json");
    }
    const bool same = !reports[0].empty() && reports[0] == reports[1];
    r.passed = r.passed && same;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + c.name + " workers " + std::to_string(c.workers_a) +
                " vs " + std::to_string(c.workers_b) + ": report.json " + (same ? "identical" : "DIFFERS") + " (" +
                std::to_string(reports[0].size()) + " bytes)";
  }
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  return r;
}

}  // namespace

std::vector<Criterion> acceptance_criteria() {
  return {
      {1, "bounce_time_law", bounce_time_law},
      {2, "sphere_bounce_time", sphere_bounce},
      {3, "kac_identity", kac_identity},
      {4, "weak_ergodicity_correspondence", weak_ergodicity_correspondence},
      {5, "mixed_phase_space_violation", mixed_phase_space},
      {6, "semiclassical_h_independence", semiclassical_h_independence},
      {7, "measure_preservation", measure_preservation},
      {8, "smooth_system_volumes", smooth_volumes},
      {9, "determinism", determinism},
  };
}

int run_suite(const std::string& filter, double scale, std::ostream& out) {
  int failures = 0, matched = 0;
  for (const auto& c : acceptance_criteria()) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos && std::to_string(c.id) != filter) continue;
    ++matched;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c.run(scale);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !r.passed;
    out << "criterion " << c.id << " " << c.name << ": " << (r.passed ? "PASS" : "FAIL") << " [" << fmt(seconds, 3)
        << " s] " << r.detail << std::endl;
  }
  return matched == 0 ? -1 : failures;
}

}  // namespace dwell
