#pragma once

#include <cmath>
#include <variant>

#include "dwell/dynamics.hpp"
#include "dwell/geometry.hpp"
#include "dwell/rng.hpp"

namespace dwell::testing {

/// Distance from p to the geometric curve carrying segment `seg`.
inline double distance_to_curve(const BoundarySegment& seg, Vec2 p) {
  const auto& shape = seg.shape();
  if (const auto* l = std::get_if<LineShape>(&shape)) {
    const Vec2 e = l->b - l->a;
    return std::abs(cross(e, p - l->a)) / norm(e);
  }
  if (const auto* a = std::get_if<ArcShape>(&shape)) return std::abs(norm(p - a->center) - a->radius);
  const auto& c = std::get<CosineShape>(shape);
  return std::abs(p.y - c.height(p.x));
}

/// Random interior point and direction: halfway along a random chord.
struct InteriorRay {
  Vec2 origin;
  Vec2 direction;
};

inline InteriorRay random_interior_ray(SampleStream& rng, const BilliardTable& table) {
  for (;;) {
    const BoundaryPhasePoint x{rng.uniform() * table.perimeter(), rng.uniform(-0.999, 0.999)};
    const auto ray = ray_from_birkhoff(table, x, 1.0);
    const auto hit = next_collision(ray.point, ray.direction, table, ray.segment);
    if (!hit.ok()) continue;
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    return {ray.point + ray.direction * (hit.event.length * rng.uniform(0.05, 0.95)),
            {std::cos(angle), std::sin(angle)}};
  }
}

inline std::vector<BilliardTable> builtin_tables() {
  std::vector<BilliardTable> t;
  t.push_back(make_circle(1.0, 0.2));
  t.push_back(make_rectangle(1.0, 1.0, 0.2));
  t.push_back(make_stadium(2.0, 1.0, 0.4));
  t.push_back(make_mushroom(1.0, 1.0, 1.0, 1.0));
  t.push_back(make_cosine_channel(6.0, 1.0, 0.8, 0.6));
  return t;
}

}  // namespace dwell::testing
