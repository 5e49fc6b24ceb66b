#include "dwell/dynamics.hpp"

#include <cmath>

#include "dwell/errors.hpp"

namespace dwell {

ParticleSpec ParticleSpec::make(double mass, double energy) {
  if (!(mass > 0.0) || !(energy > 0.0)) throw InvalidParams("particle needs m > 0 and E > 0");
  ParticleSpec s;
  s.mass = mass;
  s.energy = energy;
  s.p_max_sq = 2.0 * mass * energy;
  s.p_max = std::sqrt(s.p_max_sq);
  s.speed = s.p_max / mass;
  return s;
}

MapStep boundary_map(BoundaryPhasePoint x, const BilliardTable& table, const ParticleSpec& particle) {
  if (!(std::abs(x.p) < particle.p_max)) throw InvalidParams("boundary_map needs |p| < p_max");
  const BoundaryRay ray = ray_from_birkhoff(table, x, particle.p_max);
  const CollisionResult hit = next_collision(ray.point, ray.direction, table, ray.segment);
  if (hit.status == HitStatus::NoIntersection) throw NoIntersection("ray escaped table '" + table.family() + "'");
  MapStep step;
  step.status = hit.status;
  step.segment = hit.event.segment;
  step.flight_time = hit.event.length / particle.speed;
  step.next = birkhoff_coords(hit.event, normalized(reflect(ray.direction, hit.event.normal)), particle.p_max);
  return step;
}

BoundaryPhasePoint sample_incoming(SampleStream& rng, const BilliardTable& table, const ParticleSpec& particle) {
  const auto openings = table.openings();
  if (openings.empty()) throw NoOpening("table '" + table.family() + "' has no opening");
  double along = rng.uniform() * table.opening_width();
  int chosen = openings.back();
  for (int id : openings) {
    const double len = table.segment(id).length();
    if (along < len) {
      chosen = id;
      break;
    }
    along -= len;
  }
  along = std::min(along, table.segment(chosen).length());
  const double p = rng.uniform(-particle.p_max, particle.p_max);
  return {table.wrap(table.offset(chosen) + along), p};
}

ReturnRecord first_return(BoundaryPhasePoint x0, const BilliardTable& table, const ParticleSpec& particle,
                          std::uint64_t n_max) {
  return first_return(x0, table, particle, n_max, [](BoundaryPhasePoint, double) {});
}

double wrapped_difference(const BilliardTable& table, double a, double b) {
  const double L = table.perimeter();
  double d = std::fmod(a - b, L);
  if (d > 0.5 * L) d -= L;
  if (d <= -0.5 * L) d += L;
  return d;
}

JacobianResult jacobian_check(BoundaryPhasePoint x, const BilliardTable& table, const ParticleSpec& particle,
                              double h) {
  JacobianResult out;
  const double hq = h;
  const double hp = h * particle.p_max;
  if (std::abs(x.p) + hp >= particle.p_max) return out;

  const int home = table.locate(x.q).index;
  const BoundaryPhasePoint stencil[4] = {
      {table.wrap(x.q + hq), x.p}, {table.wrap(x.q - hq), x.p}, {x.q, x.p + hp}, {x.q, x.p - hp}};
  const MapStep center = boundary_map(x, table, particle);
  if (center.status != HitStatus::Ok) return out;
  MapStep img[4];
  for (int k = 0; k < 4; ++k) {
    if (table.locate(stencil[k].q).index != home) return out;
    img[k] = boundary_map(stencil[k], table, particle);
    if (img[k].status != HitStatus::Ok || img[k].segment != center.segment) return out;
  }
  const double dqdq = wrapped_difference(table, img[0].next.q, img[1].next.q) / (2.0 * hq);
  const double dpdq = (img[0].next.p - img[1].next.p) / (2.0 * hq);
  const double dqdp = wrapped_difference(table, img[2].next.q, img[3].next.q) / (2.0 * hp);
  const double dpdp = (img[2].next.p - img[3].next.p) / (2.0 * hp);
  out.usable = true;
  out.det = std::abs(dqdq * dpdp - dqdp * dpdq);
  return out;
}

ReversalResult time_reversal_check(BoundaryPhasePoint x, const BilliardTable& table, const ParticleSpec& particle,
                                   int steps) {
  ReversalResult out;
  BoundaryPhasePoint cur = x;
  for (int pass = 0; pass < 2; ++pass) {
    for (int k = 0; k < steps; ++k) {
      if (!(std::abs(cur.p) < particle.p_max)) return out;
      const MapStep s = boundary_map(cur, table, particle);
      if (s.status != HitStatus::Ok) return out;
      cur = s.next;
    }
    cur.p = -cur.p;
  }
  out.usable = true;
  out.q_error = std::abs(wrapped_difference(table, cur.q, x.q));
  out.p_error = std::abs(cur.p - x.p);
  return out;
}

}  // namespace dwell
