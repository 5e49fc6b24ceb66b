#include "dwell/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dwell/errors.hpp"
#include "dwell/kernels.hpp"

namespace dwell {
namespace {

constexpr std::uint64_t kBlock = 4096;
constexpr std::int64_t kFixedLimit = std::int64_t{1} << 52;

}  // namespace

MeasureEstimate mu_C(std::span<const double> widths, const ParticleSpec& particle) {
  double total = 0.0;
  for (double w : widths) {
    if (!(w > 0.0)) throw InvalidParams("opening widths must be positive");
    total += w;
  }
  return MeasureEstimate::analytic(2.0 * particle.p_max * total);
}

MeasureEstimate mu_C(const BilliardTable& table, const ParticleSpec& particle) {
  if (!table.has_opening()) throw NoOpening("table '" + table.family() + "' has no opening");
  return MeasureEstimate::analytic(2.0 * particle.p_max * table.opening_width());
}

MeasureEstimate mu_Gamma(const BilliardTable& table, const ParticleSpec& particle) {
  return MeasureEstimate::analytic(2.0 * particle.p_max * table.perimeter());
}

MeasureEstimate omega_billiard_2d(const BilliardTable& table, const ParticleSpec& particle) {
  return MeasureEstimate::analytic(std::numbers::pi * particle.p_max_sq * table.area());
}

MeasureEstimate d_omega_dE_billiard_2d(const BilliardTable& table, const ParticleSpec& particle) {
  return MeasureEstimate::analytic(2.0 * std::numbers::pi * particle.mass * table.area());
}

// ---------------------------------------------------------------------------

CoverageGrid::CoverageGrid(int nq, int np, double perimeter, double p_max)
    : nq_(nq), np_(np), perimeter_(perimeter), p_max_(p_max) {
  if (nq <= 0 || np <= 0) throw InvalidParams("coverage grid needs positive dimensions");
  if (!(perimeter > 0.0) || !(p_max > 0.0)) throw InvalidParams("coverage grid needs positive extent");
  visits_.assign(static_cast<std::size_t>(nq) * np, 0);
  flight_fixed_.assign(visits_.size(), 0);
}

double CoverageGrid::cell_measure() const { return (perimeter_ / nq_) * (2.0 * p_max_ / np_); }

std::size_t CoverageGrid::cell_index(double q, double p) const {
  const int iq = std::clamp(static_cast<int>(std::floor(q / perimeter_ * nq_)), 0, nq_ - 1);
  const int ip = std::clamp(static_cast<int>(std::floor((p + p_max_) / (2.0 * p_max_) * np_)), 0, np_ - 1);
  return at(iq, ip);
}

void CoverageGrid::add(double q, double p, double flight_time) {
  const std::size_t i = cell_index(q, p);
  if (visits_[i] == UINT32_MAX) throw InvalidParams("coverage grid visit counter overflow");
  ++visits_[i];
  flight_fixed_[i] += std::llround(std::ldexp(flight_time, kFixedShift));
  if (flight_fixed_[i] >= kFixedLimit) throw InvalidParams("coverage grid flight-time accumulator overflow");
}

void CoverageGrid::merge(const CoverageGrid& other) {
  if (other.nq_ != nq_ || other.np_ != np_) throw InvalidParams("cannot merge coverage grids of different shape");
  for (std::size_t i = 0; i < visits_.size(); ++i) {
    const std::uint64_t v = std::uint64_t{visits_[i]} + other.visits_[i];
    if (v > UINT32_MAX) throw InvalidParams("coverage grid visit counter overflow");
    visits_[i] = static_cast<std::uint32_t>(v);
    flight_fixed_[i] += other.flight_fixed_[i];
    if (flight_fixed_[i] >= kFixedLimit) throw InvalidParams("coverage grid flight-time accumulator overflow");
  }
}

double CoverageGrid::mean_flight_time(int iq, int ip) const {
  const std::size_t i = at(iq, ip);
  if (visits_[i] == 0) return 0.0;
  return std::ldexp(static_cast<double>(flight_fixed_[i]), -kFixedShift) / visits_[i];
}

std::uint64_t CoverageGrid::total_visits() const {
  std::uint64_t n = 0;
  for (auto v : visits_) n += v;
  return n;
}

std::uint64_t CoverageGrid::occupied_cells() const {
  return kernels::grid_reduce(visits_, flight_fixed_, kFixedShift).occupied;
}

double CoverageGrid::occupied_fraction() const {
  return static_cast<double>(occupied_cells()) / static_cast<double>(total_cells());
}

std::uint64_t CoverageGrid::boundary_cells() const {
  std::uint64_t count = 0;
  for (int iq = 0; iq < nq_; ++iq)
    for (int ip = 0; ip < np_; ++ip) {
      if (visits_[at(iq, ip)] == 0) continue;
      const bool empty_neighbour = visits_[at((iq + 1) % nq_, ip)] == 0 || visits_[at((iq + nq_ - 1) % nq_, ip)] == 0 ||
                                   (ip + 1 < np_ && visits_[at(iq, ip + 1)] == 0) ||
                                   (ip > 0 && visits_[at(iq, ip - 1)] == 0);
      if (empty_neighbour) ++count;
    }
  return count;
}

double CoverageGrid::flight_integral() const {
  return kernels::grid_reduce(visits_, flight_fixed_, kFixedShift).mean_flight_sum * cell_measure();
}

void CoverageGrid::set_cell(int iq, int ip, std::uint32_t visits, double flight_sum) {
  visits_[at(iq, ip)] = visits;
  flight_fixed_[at(iq, ip)] = std::llround(std::ldexp(flight_sum, kFixedShift));
}

// ---------------------------------------------------------------------------

CoverageStudy::CoverageStudy(int nq, int np, double perimeter, double p_max)
    : full_(nq, np, perimeter, p_max),
      half_(nq, np, perimeter, p_max),
      coarse_(std::max(1, nq / 2), std::max(1, np / 2), perimeter, p_max) {}

void CoverageStudy::add(std::uint64_t sample_index, double q, double p, double flight_time) {
  full_.add(q, p, flight_time);
  if (sample_index % 2 == 0) {
    half_.add(q, p, flight_time);
    coarse_.add(q, p, flight_time);
  }
}

void CoverageStudy::merge(const CoverageStudy& other) {
  full_.merge(other.full_);
  half_.merge(other.half_);
  coarse_.merge(other.coarse_);
}

namespace {

BoxCountEstimate doubling_study(double full, double half, double coarse, double floor, std::uint64_t samples,
                                bool strict, const char* what) {
  BoxCountEstimate out;
  out.estimate.value = full;
  out.estimate.std_error = std::max(std::abs(full - coarse), floor);
  out.estimate.n_samples = samples;
  out.estimate.method = Method::BoxCounting;
  out.half_sample_value = half;
  out.coarse_value = coarse;
  out.converged = std::abs(full - half) <= 3.0 * out.estimate.std_error;
  if (strict && !out.converged)
    throw NotConverged(std::string(what) + ": halving the samples moved the estimate by more than 3 sigma");
  return out;
}

}  // namespace

MeasureEstimate mu_Gamma_prime(const CoverageGrid& grid) {
  MeasureEstimate e;
  e.value = grid.occupied_fraction() * 2.0 * grid.p_max() * grid.perimeter();
  e.n_samples = grid.total_visits();
  e.method = Method::BoxCounting;
  return e;
}

BoxCountEstimate mu_Gamma_prime(const CoverageStudy& study, bool strict) {
  return doubling_study(mu_Gamma_prime(study.full()).value, mu_Gamma_prime(study.half_samples()).value,
                        mu_Gamma_prime(study.coarse()).value, study.full().cell_measure(),
                        study.full().total_visits(), strict, "mu(Gamma')");
}

MeasureEstimate d_omega_prime_dE(const CoverageGrid& grid, const ParticleSpec& particle) {
  if (std::abs(grid.p_max() - particle.p_max) > 1e-12 * particle.p_max)
    throw InvalidParams("coverage grid and particle disagree on p_max");
  MeasureEstimate e;
  e.value = grid.flight_integral();
  e.n_samples = grid.total_visits();
  e.method = Method::BoxCounting;
  return e;
}

BoxCountEstimate d_omega_prime_dE(const CoverageStudy& study, const ParticleSpec& particle, bool strict) {
  const double full = d_omega_prime_dE(study.full(), particle).value;
  const auto occupied = study.full().occupied_cells();
  const double one_cell = occupied ? full / static_cast<double>(occupied) : 0.0;
  return doubling_study(full, d_omega_prime_dE(study.half_samples(), particle).value,
                        d_omega_prime_dE(study.coarse(), particle).value, one_cell, study.full().total_visits(),
                        strict, "dOmega'/dE");
}

// ---------------------------------------------------------------------------

BounceTime bounce_time_closed(const BilliardTable& table, const ParticleSpec& particle, std::uint64_t n_samples,
                              std::uint64_t seed, unsigned workers) {
  const std::uint64_t blocks = block_count(n_samples, kBlock);
  std::vector<Moments> moments(blocks);
  std::vector<std::uint64_t> corners(blocks, 0);
  for_each_block(n_samples, kBlock, workers, [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      SampleStream rng(seed, i);
      const BoundaryPhasePoint x{rng.uniform() * table.perimeter(), rng.uniform(-particle.p_max, particle.p_max)};
      const BoundaryRay ray = ray_from_birkhoff(table, x, particle.p_max);
      const CollisionResult hit = next_collision(ray.point, ray.direction, table, ray.segment);
      if (hit.status == HitStatus::NoIntersection) throw NoIntersection("ray escaped table '" + table.family() + "'");
      if (hit.status == HitStatus::CornerHit) {
        ++corners[b];
        continue;
      }
      moments[b].add(hit.event.length / particle.speed);
    }
  });
  BounceTime out;
  out.monte_carlo = mean_estimate(moments);
  out.analytic = MeasureEstimate::analytic(std::numbers::pi * table.area() / (particle.speed * table.perimeter()));
  for (auto c : corners) out.corner_discarded += c;
  return out;
}

SphereBounceTime sphere_bounce_time(double radius, const ParticleSpec& particle, std::uint64_t n_samples,
                                    std::uint64_t seed) {
  if (!(radius > 0.0)) throw InvalidParams("sphere radius must be positive");
  constexpr double pi = std::numbers::pi;
  const double p = particle.p_max;
  // Omega = (4 pi R^3 / 3)(4 pi p^3 / 3); dOmega/dE = (4 pi R^3 / 3) 4 pi p^2 (m / p).
  const double d_omega_dE = (4.0 * pi * radius * radius * radius / 3.0) * 4.0 * pi * p * particle.mass;
  // Omega_Sigma = (area of the sphere) x (area of the momentum disc tangent to it).
  const double omega_sigma = 4.0 * pi * radius * radius * pi * p * p;

  SphereBounceTime out;
  out.analytic = MeasureEstimate::analytic(d_omega_dE / omega_sigma);
  const std::uint64_t blocks = block_count(n_samples, kBlock);
  std::vector<Moments> moments(blocks);
  for_each_block(n_samples, kBlock, 1, [&](std::uint64_t b, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      SampleStream rng(seed, i);
      // Flux weighting: density of cos(theta) is 2 cos(theta), so cos^2 is uniform.
      const double cos_theta = std::sqrt(rng.uniform());
      moments[b].add(2.0 * radius * cos_theta / particle.speed);
    }
  });
  out.monte_carlo = mean_estimate(moments);
  return out;
}

}  // namespace dwell
