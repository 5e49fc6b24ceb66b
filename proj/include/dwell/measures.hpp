#pragma once

// Phase-space measures of the boundary section and energy-shell volumes.
// Units: for 2D billiards, boundary measures are length x momentum and shell
// volumes length^2 x momentum^2.

#include <cstdint>
#include <span>
#include <vector>

#include "dwell/dynamics.hpp"
#include "dwell/stats.hpp"

namespace dwell {

/// mu(C) = 2 p_max * (summed opening width).
MeasureEstimate mu_C(std::span<const double> opening_widths, const ParticleSpec& particle);
MeasureEstimate mu_C(const BilliardTable& table, const ParticleSpec& particle);
/// mu(Gamma) = 2 p_max L.
MeasureEstimate mu_Gamma(const BilliardTable& table, const ParticleSpec& particle);
/// Omega = pi p_max^2 A = 2 pi m E A.
MeasureEstimate omega_billiard_2d(const BilliardTable& table, const ParticleSpec& particle);
/// dOmega/dE = 2 pi m A (energy independent in 2D).
MeasureEstimate d_omega_dE_billiard_2d(const BilliardTable& table, const ParticleSpec& particle);

/// Occupancy grid over the boundary phase space [0, L) x [-p_max, p_max].
/// Each cell keeps its visit count and the summed flight time of the chords
/// leaving the visits, stored in fixed point so merging is exact and
/// order independent.
class CoverageGrid {
 public:
  static constexpr int kFixedShift = 24;

  CoverageGrid() = default;
  CoverageGrid(int nq, int np, double perimeter, double p_max);

  int nq() const { return nq_; }
  int np() const { return np_; }
  std::size_t total_cells() const { return visits_.size(); }
  double perimeter() const { return perimeter_; }
  double p_max() const { return p_max_; }
  /// dq * dp of one cell.
  double cell_measure() const;

  std::size_t cell_index(double q, double p) const;
  void add(double q, double p, double flight_time);
  /// Cell-wise sum. Throws InvalidParams on a shape mismatch.
  void merge(const CoverageGrid& other);

  std::uint32_t visits(int iq, int ip) const { return visits_[at(iq, ip)]; }
  /// Mean flight time of the chords leaving cell (iq, ip); 0 for an empty cell.
  double mean_flight_time(int iq, int ip) const;
  std::uint64_t total_visits() const;

  std::uint64_t occupied_cells() const;
  double occupied_fraction() const;
  /// Occupied cells with at least one empty 4-neighbour (q wraps, p does not).
  std::uint64_t boundary_cells() const;
  /// Sum over occupied cells of mean flight time times cell measure.
  double flight_integral() const;

  std::span<const std::uint32_t> visit_data() const { return visits_; }
  std::span<const std::int64_t> flight_data() const { return flight_fixed_; }

  /// Direct cell access, for constructing synthetic grids.
  void set_cell(int iq, int ip, std::uint32_t visits, double flight_sum);

 private:
  std::size_t at(int iq, int ip) const { return static_cast<std::size_t>(iq) * np_ + ip; }

  int nq_ = 0;
  int np_ = 0;
  double perimeter_ = 1.0;
  double p_max_ = 1.0;
  std::vector<std::uint32_t> visits_;
  std::vector<std::int64_t> flight_fixed_;
};

/// The production grid plus two companions for the doubling study: the same
/// resolution fed with even-indexed samples only, and half resolution fed
/// with even-indexed samples only.
class CoverageStudy {
 public:
  CoverageStudy() = default;
  CoverageStudy(int nq, int np, double perimeter, double p_max);

  void add(std::uint64_t sample_index, double q, double p, double flight_time);
  void merge(const CoverageStudy& other);

  const CoverageGrid& full() const { return full_; }
  const CoverageGrid& half_samples() const { return half_; }
  const CoverageGrid& coarse() const { return coarse_; }

 private:
  CoverageGrid full_;
  CoverageGrid half_;
  CoverageGrid coarse_;
};

/// A box-counting estimate and its doubling study. std_error is
/// |full - coarse| (halving resolution and samples together), floored at the
/// contribution of one cell; converged is false when halving the samples
/// alone moves the estimate by more than 3 std_error.
struct BoxCountEstimate {
  MeasureEstimate estimate;
  double half_sample_value = 0.0;
  double coarse_value = 0.0;
  bool converged = true;
};

/// (occupied / total) * 2 p_max L from a single grid, without uncertainty.
MeasureEstimate mu_Gamma_prime(const CoverageGrid& grid);
/// With the doubling study; throws NotConverged when strict and not converged.
BoxCountEstimate mu_Gamma_prime(const CoverageStudy& study, bool strict = false);

/// Integral of the outgoing flight time over the occupied cells.
MeasureEstimate d_omega_prime_dE(const CoverageGrid& grid, const ParticleSpec& particle);
BoxCountEstimate d_omega_prime_dE(const CoverageStudy& study, const ParticleSpec& particle, bool strict = false);

struct BounceTime {
  MeasureEstimate monte_carlo;
  MeasureEstimate analytic;  ///< pi A / (v L)
  std::uint64_t corner_discarded = 0;
};

/// Mean single-chord flight time with (q, p) uniform on the closed table's
/// boundary phase space.
BounceTime bounce_time_closed(const BilliardTable& table, const ParticleSpec& particle, std::uint64_t n_samples,
                              std::uint64_t seed, unsigned workers = 1);

struct SphereBounceTime {
  MeasureEstimate analytic;  ///< (dOmega/dE) / Omega_Sigma for the ball: 4R / (3v)
  MeasureEstimate monte_carlo;
};

/// Mean chord of a ball of radius R under flux-weighted (cosine-law) entry.
SphereBounceTime sphere_bounce_time(double radius, const ParticleSpec& particle, std::uint64_t n_samples,
                                    std::uint64_t seed);

/// Geometric bundle at fixed energy.
struct ShellVolumes {
  MeasureEstimate omega;
  MeasureEstimate omega_sigma;
  MeasureEstimate d_omega_dE;
  MeasureEstimate d_omega_prime_dE;
  MeasureEstimate mu_gamma;
  MeasureEstimate mu_gamma_prime;
  MeasureEstimate mu_c;
};

}  // namespace dwell
