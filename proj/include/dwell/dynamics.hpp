#pragma once

// Birkhoff boundary map T and the scattering first-return map to the openings.
//
// Counting convention: a trajectory that enters through an opening and leaves
// after n applications of T has return time n, where the n-th application is
// the one that lands on an opening. The number of wall bounces is n - 1, so a
// chord straight across from opening to opening has n = 1.

#include <cstdint>

#include "dwell/errors.hpp"
#include "dwell/geometry.hpp"
#include "dwell/rng.hpp"

namespace dwell {

struct ParticleSpec {
  double mass = 1.0;
  double energy = 0.5;
  double p_max_sq = 1.0;  ///< 2 m E
  double p_max = 1.0;
  double speed = 1.0;  ///< p_max / m, fixed for the lifetime of the particle

  /// Throws InvalidParams unless m > 0 and E > 0.
  static ParticleSpec make(double mass, double energy);
};

struct MapStep {
  HitStatus status = HitStatus::Ok;
  BoundaryPhasePoint next;
  double flight_time = 0.0;
  int segment = -1;
};

/// One application of T on the closed table (openings reflect like walls).
/// Requires |x.p| < p_max.
MapStep boundary_map(BoundaryPhasePoint x, const BilliardTable& table, const ParticleSpec& particle);

/// Incoming state with q uniform over the openings (weighted by width) and
/// p uniform on (-p_max, p_max).
BoundaryPhasePoint sample_incoming(SampleStream& rng, const BilliardTable& table, const ParticleSpec& particle);

struct ReturnRecord {
  std::uint64_t n = 0;
  double tau = 0.0;          ///< summed flight length / speed
  double path_length = 0.0;  ///< summed flight length
  BoundaryPhasePoint exit;
  bool censored = false;
  bool corner_discarded = false;
};

inline constexpr std::uint64_t kDefaultMaxIterations = 10'000'000;

/// Follows x0 until it lands on an opening. visit(point, flight_time) is called
/// for x0 and every wall collision before the landing, with the flight time of
/// the chord leaving that point.
template <class Visit>
ReturnRecord first_return(BoundaryPhasePoint x0, const BilliardTable& table, const ParticleSpec& particle,
                          std::uint64_t n_max, Visit&& visit) {
  ReturnRecord rec;
  BoundaryRay ray = ray_from_birkhoff(table, x0, particle.p_max);
  BoundaryPhasePoint current = x0;
  for (std::uint64_t n = 1;; ++n) {
    const CollisionResult hit = next_collision(ray.point, ray.direction, table, ray.segment);
    if (hit.status == HitStatus::NoIntersection) throw NoIntersection("ray escaped table '" + table.family() + "'");
    rec.n = n;
    if (hit.status == HitStatus::CornerHit) {
      rec.corner_discarded = true;
      rec.tau = rec.path_length / particle.speed;
      return rec;
    }
    rec.path_length += hit.event.length;
    visit(current, hit.event.length / particle.speed);
    const Vec2 out = normalized(reflect(ray.direction, hit.event.normal));
    if (table.segment(hit.event.segment).is_opening()) {
      rec.tau = rec.path_length / particle.speed;
      rec.exit = birkhoff_coords(hit.event, out, particle.p_max);
      return rec;
    }
    if (n >= n_max) {
      rec.censored = true;
      rec.tau = rec.path_length / particle.speed;
      return rec;
    }
    current = birkhoff_coords(hit.event, out, particle.p_max);
    ray = {hit.event.segment, hit.event.point, out};
  }
}

ReturnRecord first_return(BoundaryPhasePoint x0, const BilliardTable& table, const ParticleSpec& particle,
                          std::uint64_t n_max = kDefaultMaxIterations);

struct JacobianResult {
  bool usable = false;
  double det = 0.0;
};

/// |det DT| from central differences with steps h in q and h * p_max in p.
/// Unusable when any stencil point hits a corner or the stencil straddles a
/// segment boundary before or after the map.
JacobianResult jacobian_check(BoundaryPhasePoint x, const BilliardTable& table, const ParticleSpec& particle,
                              double h);

struct ReversalResult {
  bool usable = false;
  double q_error = 0.0;  ///< wrapped arc-length distance to the start
  double p_error = 0.0;
};

/// k steps forward, flip p, k steps forward, flip p.
ReversalResult time_reversal_check(BoundaryPhasePoint x, const BilliardTable& table, const ParticleSpec& particle,
                                   int steps);

/// Signed q difference a - b folded into (-L/2, L/2].
double wrapped_difference(const BilliardTable& table, double a, double b);

}  // namespace dwell
