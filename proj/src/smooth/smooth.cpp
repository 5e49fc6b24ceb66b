#include "dwell/smooth.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "dwell/errors.hpp"

namespace dwell {
namespace {

double switch_bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

double smooth_switch(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = switch_bump(x), b = switch_bump(1.0 - x);
  return a / (a + b);
}

double smooth_switch_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = switch_bump(x), b = switch_bump(1.0 - x);
  const double da = a / (x * x);
  const double db = -b / ((1.0 - x) * (1.0 - x));
  return (da * b - a * db) / ((a + b) * (a + b));
}

CavityPotential::CavityPotential(CavityParams p) : params_(p) {
  if (!(p.omega0 > 0.0)) throw InvalidParams("cavity: omega0 must be positive");
  if (!(p.g >= 0.0 && p.g < 1.0)) throw InvalidParams("cavity: g must lie in [0, 1)");
  if (!(p.sigma > 0.0) || !(p.lambda > 0.0)) throw InvalidParams("cavity: sigma and lambda must be positive");
  if (!(p.u0 >= 0.0)) throw InvalidParams("cavity: U0 must be non-negative");
}

double CavityPotential::cap(double x) const {
  const double s = smooth_switch(x);
  if (s == 0.0) return 0.0;
  return params_.u0 * std::exp((x - params_.x_w) / params_.lambda) * s;
}

double CavityPotential::value(double x, double y) const {
  const auto& p = params_;
  const double s = smooth_switch(x);
  if (s == 0.0) return 0.5 * p.omega0 * p.omega0 * y * y;
  const double dx = x - p.x_c;
  const double G = std::exp(-dx * dx / (p.sigma * p.sigma));
  const double w2 = p.omega0 * p.omega0 * (1.0 - p.g * s * G);
  return 0.5 * w2 * y * y + p.u0 * std::exp((x - p.x_w) / p.lambda) * s;
}

Vec2 CavityPotential::gradient(double x, double y) const {
  const auto& p = params_;
  const double s = smooth_switch(x);
  const double k0 = p.omega0 * p.omega0;
  if (s == 0.0) return {0.0, k0 * y};
  const double ds = smooth_switch_derivative(x);
  const double dx = x - p.x_c;
  const double G = std::exp(-dx * dx / (p.sigma * p.sigma));
  const double dG = -2.0 * dx / (p.sigma * p.sigma) * G;
  const double e = p.u0 * std::exp((x - p.x_w) / p.lambda);
  const double gx = -0.5 * y * y * k0 * p.g * (ds * G + s * dG) + e * (s / p.lambda + ds);
  const double gy = k0 * (1.0 - p.g * s * G) * y;
  return {gx, gy};
}

HarmonicChannel::HarmonicChannel(double omega, double mass) : k_(mass * omega * omega) {
  if (!(omega > 0.0) || !(mass > 0.0)) throw InvalidParams("harmonic channel: omega and mass must be positive");
}

double HarmonicChannel::value(double, double y) const { return 0.5 * k_ * y * y; }
Vec2 HarmonicChannel::gradient(double, double y) const { return {0.0, k_ * y}; }

PowerWell::PowerWell(double v0, double a, int n) : v0_(v0), a_(a), n_(n) {
  if (!(v0 > 0.0) || !(a > 0.0)) throw InvalidParams("power well: V0 and a must be positive");
  if (n < 2 || n % 2 != 0) throw InvalidParams("power well: exponent must be even and >= 2");
}

double PowerWell::value(double, double y) const { return v0_ * std::pow(y / a_, n_); }
Vec2 PowerWell::gradient(double, double y) const { return {0.0, v0_ * n_ * std::pow(y / a_, n_ - 1) / a_}; }

double AnharmonicWell::value(double x, double y) const { return 0.5 * (x * x + y * y) + 0.5 * x * x * y * y; }
Vec2 AnharmonicWell::gradient(double x, double y) const { return {x + x * y * y, y + x * x * y}; }

ExpressionPotential::ExpressionPotential(Expression v, Expression dvdx, Expression dvdy, double lower_bound)
    : v_(std::move(v)), dvdx_(std::move(dvdx)), dvdy_(std::move(dvdy)), lower_(lower_bound) {}

SmoothSystem default_cavity_system() {
  SmoothSystem s;
  s.potential = std::make_shared<CavityPotential>(CavityParams{});
  return s;
}

SmoothSystem separable_system() {
  SmoothSystem s;
  CavityParams p;
  p.g = 0.0;
  s.potential = std::make_shared<CavityPotential>(p);
  s.y_min = -1.2;
  s.y_max = 1.2;
  return s;
}

double waveguide_deviation(const SmoothSystem& system) {
  double worst = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double x = -system.x_max * i / 64.0;
    for (int j = 0; j <= 64; ++j) {
      const double y = system.y_min + (system.y_max - system.y_min) * j / 64.0;
      worst = std::max(worst, std::abs(system.potential->value(x, y) - system.transverse(y)));
    }
  }
  return worst;
}

double confinement_violation(const SmoothSystem& system, double energy, int points_per_face) {
  std::uint64_t bad = 0, total = 0;
  for (int i = 0; i < points_per_face; ++i) {
    const double u = (i + 0.5) / points_per_face;
    const double y = system.y_min + (system.y_max - system.y_min) * u;
    const double x = system.x_max * u;
    bad += system.potential->value(system.x_max, y) <= energy;
    bad += system.potential->value(x, system.y_min) <= energy;
    bad += system.potential->value(x, system.y_max) <= energy;
    total += 3;
  }
  return static_cast<double>(bad) / static_cast<double>(total);
}

double gradient_mismatch(const Potential& potential, const SmoothSystem& box) {
  double worst = 0.0;
  const double scale = std::max({box.x_max, box.y_max - box.y_min, 1.0});
  const double h = 1e-6 * scale;
  for (int i = 1; i < 32; ++i) {
    const double x = box.x_max * i / 32.0;
    for (int j = 1; j < 32; ++j) {
      const double y = box.y_min + (box.y_max - box.y_min) * j / 32.0;
      const Vec2 g = potential.gradient(x, y);
      const double fx = (potential.value(x + h, y) - potential.value(x - h, y)) / (2.0 * h);
      const double fy = (potential.value(x, y + h) - potential.value(x, y - h)) / (2.0 * h);
      const double m = std::max(std::abs(g.x - fx), std::abs(g.y - fy)) / std::max(1.0, norm(g));
      worst = std::max(worst, m);
    }
  }
  return worst;
}

PhaseState integrate_step(const PhaseState& s, double dt, const Potential& potential, double mass) {
  PhaseState out = s;
  Vec2 g = potential.gradient(out.x, out.y);
  out.px -= 0.5 * dt * g.x;
  out.py -= 0.5 * dt * g.y;
  out.x += dt * out.px / mass;
  out.y += dt * out.py / mass;
  g = potential.gradient(out.x, out.y);
  out.px -= 0.5 * dt * g.x;
  out.py -= 0.5 * dt * g.y;
  return out;
}

double hamiltonian(const PhaseState& s, const Potential& potential, double mass) {
  return 0.5 * (s.px * s.px + s.py * s.py) / mass + potential.value(s.x, s.y);
}

SmoothDwell smooth_dwell(const SectionState& start, const SmoothSystem& system, double dt, double t_max) {
  if (!(dt > 0.0)) throw InvalidParams("time step must be positive");
  const double m = system.mass;
  const double kinetic_x = start.energy - system.h_perp(start.y, start.py);
  if (!(kinetic_x > 0.0)) throw InvalidParams("section state has no incoming longitudinal momentum");
  const Potential& V = *system.potential;

  PhaseState s{0.0, start.y, std::sqrt(2.0 * m * kinetic_x), start.py};
  Vec2 g = V.gradient(s.x, s.y);
  SmoothDwell out;
  double t = 0.0;
  for (;;) {
    if (t > t_max) {
      out.censored = true;
      out.tau = t;
      return out;
    }
    const PhaseState before = s;
    s.px -= 0.5 * dt * g.x;
    s.py -= 0.5 * dt * g.y;
    s.x += dt * s.px / m;
    s.y += dt * s.py / m;
    g = V.gradient(s.x, s.y);
    s.px -= 0.5 * dt * g.x;
    s.py -= 0.5 * dt * g.y;
    ++out.steps;

    if (s.x < 0.0 && s.px < 0.0) {
      double lo = 0.0, hi = dt;
      while (hi - lo > 1e-10 * dt) {
        const double mid = 0.5 * (lo + hi);
        if (integrate_step(before, mid, V, m).x < 0.0) hi = mid;
        else lo = mid;
      }
      out.tau = t + 0.5 * (lo + hi);
      return out;
    }
    t += dt;
    if (s.x > system.x_max || s.y < system.y_min || s.y > system.y_max) {
      std::ostringstream msg;
      msg << "orbit left the declared box at (" << s.x << ", " << s.y << "), t = " << t;
      throw EscapeOutOfBox(msg.str());
    }
  }
}

SectionState sample_section(SampleStream& rng, const SmoothSystem& system, double energy) {
  const double reach = energy - system.potential->lower_bound();
  if (reach > 0.0) {
    const double P = std::sqrt(2.0 * system.mass * reach);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const double y = rng.uniform(system.y_min, system.y_max);
      const double py = rng.uniform(-P, P);
      if (system.h_perp(y, py) < energy) return {y, py, 0.0, energy};
    }
  }
  throw NoOpenChannel("no open channel at E = " + std::to_string(energy));
}

MeasureEstimate omega_sigma_smooth(const SmoothSystem& system, double energy) {
  const double m = system.mass;
  auto f = [&](double y) { return energy - system.transverse(y); };
  constexpr int kScan = 4096;
  const double h = (system.y_max - system.y_min) / kScan;

  // Allowed intervals {f > 0}, endpoints refined where f changes sign.
  std::vector<std::pair<double, double>> intervals;
  auto refine = [&](double a, double b) {
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
  };
  double open_at = std::numeric_limits<double>::quiet_NaN();
  double prev_y = system.y_min, prev_f = f(prev_y);
  if (prev_f > 0.0) open_at = prev_y;
  for (int i = 1; i <= kScan; ++i) {
    const double y = system.y_min + h * i, fy = f(y);
    if (prev_f <= 0.0 && fy > 0.0) open_at = prev_f == 0.0 ? prev_y : refine(prev_y, y);
    if (prev_f > 0.0 && fy <= 0.0) {
      intervals.emplace_back(open_at, fy == 0.0 ? y : refine(prev_y, y));
      open_at = std::numeric_limits<double>::quiet_NaN();
    }
    prev_y = y;
    prev_f = fy;
  }
  if (prev_f > 0.0) intervals.emplace_back(open_at, system.y_max);

  MeasureEstimate out;
  out.method = Method::Quadrature;
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (const auto& [a, b] : intervals) {
    double err = 0.0;
    out.value += integrator.integrate(
        [&](double y) { return 2.0 * std::sqrt(2.0 * m * std::max(0.0, f(y))); }, a, b, 1e-12, &err);
    out.std_error += err;
  }
  return out;
}

MeasureEstimate omega_sigma_mc(const SmoothSystem& system, double energy, std::uint64_t n_samples,
                               std::uint64_t seed) {
  MeasureEstimate out;
  out.method = Method::MonteCarlo;
  out.n_samples = n_samples;
  const double reach = energy - system.potential->lower_bound();
  if (!(reach > 0.0) || n_samples == 0) return out;
  const double P = std::sqrt(2.0 * system.mass * reach);
  const double area = (system.y_max - system.y_min) * 2.0 * P;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    SampleStream rng(seed, i);
    const double y = rng.uniform(system.y_min, system.y_max);
    const double py = rng.uniform(-P, P);
    hits += system.h_perp(y, py) <= energy;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n_samples);
  out.value = area * p;
  out.std_error = area * std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  return out;
}

SmoothVolumes omega_smooth(const SmoothSystem& system, double energy, std::uint64_t n_samples, std::uint64_t seed,
                           double relative_delta, unsigned workers) {
  SmoothVolumes out;
  out.omega.method = out.d_omega_dE.method = Method::MonteCarlo;
  out.omega.n_samples = out.d_omega_dE.n_samples = n_samples;
  const double vmin = system.potential->lower_bound();
  if (!(energy > vmin) || n_samples == 0) return out;
  if (!(relative_delta > 0.0 && relative_delta < 1.0)) throw InvalidParams("relative energy step must lie in (0, 1)");

  const double delta = relative_delta * (energy - vmin);
  const double P = std::sqrt(2.0 * system.mass * (energy + delta - vmin));
  const double volume = system.x_max * (system.y_max - system.y_min) * 4.0 * P * P;
  constexpr std::uint64_t kBlock = 65536;
  const std::uint64_t blocks = block_count(n_samples, kBlock);
  std::vector<std::uint64_t> below(blocks, 0), shell(blocks, 0);
  for_each_block(n_samples, kBlock, workers, [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      SampleStream rng(seed, i);
      const PhaseState s{rng.uniform_open() * system.x_max, rng.uniform(system.y_min, system.y_max),
                         rng.uniform(-P, P), rng.uniform(-P, P)};
      const double H = hamiltonian(s, *system.potential, system.mass);
      below[b] += H <= energy;
      shell[b] += H > energy - delta && H <= energy + delta;
    }
  });
  std::uint64_t c0 = 0, cs = 0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    c0 += below[b];
    cs += shell[b];
  }
  const double n = static_cast<double>(n_samples);
  const double p0 = c0 / n, ps = cs / n;
  out.delta_e = delta;
  out.omega.value = volume * p0;
  out.omega.std_error = volume * std::sqrt(p0 * (1.0 - p0) / n);
  out.d_omega_dE.value = volume * ps / (2.0 * delta);
  out.d_omega_dE.std_error = volume / (2.0 * delta) * std::sqrt(ps * (1.0 - ps) / n);
  return out;
}

SmoothEnsembleResult run_smooth_ensemble(const SmoothSystem& system, double energy,
                                         const SmoothEnsembleParams& params) {
  if (params.samples == 0) throw InvalidParams("ensemble needs at least one sample");
  constexpr std::uint64_t kBlock = 16;
  const std::uint64_t blocks = block_count(params.samples, kBlock);
  std::vector<Moments> moments(blocks);
  std::vector<std::uint64_t> censored(blocks, 0);
  for_each_block(params.samples, kBlock, params.workers, [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      SampleStream rng(params.seed, i);
      const SectionState start = sample_section(rng, system, energy);
      const SmoothDwell d = smooth_dwell(start, system, params.dt, params.t_max);
      if (d.censored) ++censored[b];
      else moments[b].add(d.tau);
    }
  });
  SmoothEnsembleResult out;
  out.mean_tau = mean_estimate(moments);
  out.accepted = params.samples;
  for (auto c : censored) out.censored += c;
  return out;
}

CorrespondenceReport smooth_correspondence(const SmoothSystem& system, double energy,
                                           const SmoothEnsembleParams& params) {
  if (waveguide_deviation(system) > 1e-12) throw InvalidParams("potential is not x-independent for x <= 0");
  const MeasureEstimate omega_sigma = omega_sigma_smooth(system, energy);
  if (!(omega_sigma.value > 0.0)) throw NoOpenChannel("Omega_Sigma = 0: no open channel at this energy");
  if (confinement_violation(system, energy) > 0.0)
    throw InvalidParams("the sub-level set {V <= E, x > 0} reaches the declared bounding box");

  const SmoothVolumes volumes =
      omega_smooth(system, energy, params.volume_samples, params.seed ^ 0x9E3779B97F4A7C15ull, 0.01, params.workers);
  const SmoothEnsembleResult ens = run_smooth_ensemble(system, energy, params);

  CorrespondenceReport r;
  r.system = system.potential->name();
  r.samples = params.samples;
  r.seed = params.seed;
  r.mean_tau = ens.mean_tau;
  r.omega_sigma = omega_sigma;
  r.d_omega_dE = volumes.d_omega_dE;
  r.tau_geometric = ratio(volumes.d_omega_dE, omega_sigma);
  r.wigner_ratio = ratio(r.tau_geometric, r.mean_tau);
  r.correspondence_z = r.wigner_ratio.std_error > 0.0 ? (r.wigner_ratio.value - 1.0) / r.wigner_ratio.std_error : 0.0;
  r.correspondence_holds = std::abs(r.correspondence_z) < 3.0;
  r.censoring.censored = ens.censored;
  r.censoring.fraction = static_cast<double>(ens.censored) / static_cast<double>(ens.accepted);
  r.censoring.reliable = r.censoring.fraction <= 1e-3;
  r.tail_note = "not computed for smooth systems";

  std::ostringstream rel;
  rel << "relative difference of <tau> and (1/Omega_Sigma) dOmega/dE: "
      << (r.mean_tau.value - r.tau_geometric.value) / r.tau_geometric.value;
  r.notes.push_back("Omega' = Omega is assumed: there is no estimator of the accessible 4D volume");
  r.notes.push_back(rel.str());
  if (!r.censoring.reliable) r.notes.push_back("censored fraction exceeds 1e-3; <tau> is a lower bound");
  return r;
}

EnergyDrift energy_drift(const PhaseState& start, const Potential& potential, double mass, double dt,
                         std::uint64_t steps, std::uint64_t window) {
  if (window == 0 || steps < window) throw InvalidParams("drift window must be positive and no longer than the run");
  const double e0 = hamiltonian(start, potential, mass);
  EnergyDrift out;
  PhaseState s = start;
  double first = 0.0, sum = 0.0;
  bool have_first = false;
  for (std::uint64_t k = 1; k <= steps; ++k) {
    s = integrate_step(s, dt, potential, mass);
    const double e = hamiltonian(s, potential, mass);
    out.max_deviation = std::max(out.max_deviation, std::abs(e - e0) / std::abs(e0));
    sum += e;
    if (k % window == 0) {
      const double mean = sum / static_cast<double>(window);
      if (!have_first) {
        first = mean;
        have_first = true;
      }
      out.secular = std::max(out.secular, std::abs(mean - first) / std::abs(e0));
      sum = 0.0;
    }
  }
  return out;
}

}  // namespace dwell
