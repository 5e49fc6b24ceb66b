#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dwell/errors.hpp"
#include "dwell/geometry.hpp"

namespace dwell {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool proper_intersection(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

BilliardTable::BilliardTable(std::vector<BoundarySegment> segments, std::string family)
    : segments_(std::move(segments)), family_(std::move(family)) {
  if (segments_.empty()) throw InvalidParams("table needs at least one segment");
  const std::size_t n = segments_.size();

  offsets_.resize(n);
  double total = 0.0;
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& seg = segments_[i];
    if (seg.is_opening() && !std::holds_alternative<LineShape>(seg.shape()))
      throw InvalidParams("openings must be straight segments");
    offsets_[i] = total;
    total += seg.length();
    area2 += seg.area_term();
  }
  perimeter_ = total;
  area_ = area2;

  // Bounding box of a dense boundary sample sets the length scale.
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = -lo;
  std::vector<std::vector<Vec2>> polylines(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& seg = segments_[i];
    const int pieces = std::holds_alternative<LineShape>(seg.shape()) ? 1 : 48;
    for (int k = 0; k <= pieces; ++k) {
      const Vec2 p = seg.point_at(seg.length() * k / pieces);
      polylines[i].push_back(p);
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
  }
  diameter_ = norm(hi - lo);

  const double closure_tol = 1e-12 * std::max(1.0, diameter_);
  corner_at_start_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prev = segments_[(i + n - 1) % n];
    const auto& cur = segments_[i];
    if (norm(prev.end() - cur.start()) > closure_tol)
      throw InvalidParams("boundary chain is not closed at segment " + std::to_string(i));
    const Vec2 t0 = prev.tangent_at(prev.length());
    const Vec2 t1 = cur.tangent_at(0.0);
    corner_at_start_[i] = (std::abs(cross(t0, t1)) > 1e-9 || dot(t0, t1) < 0.0) ? 1 : 0;
  }
  if (!(area_ > 0.0)) throw InvalidParams("boundary must be traversed counterclockwise");

  std::vector<std::pair<Vec2, Vec2>> pieces;
  for (const auto& poly : polylines)
    for (std::size_t k = 0; k + 1 < poly.size(); ++k) pieces.emplace_back(poly[k], poly[k + 1]);
  const std::size_t m = pieces.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (proper_intersection(pieces[i].first, pieces[i].second, pieces[j].first, pieces[j].second))
        throw InvalidParams("boundary intersects itself");
    }

  for (std::size_t i = 0; i < n; ++i) {
    const int id = static_cast<int>(i);
    const auto& shape = segments_[i].shape();
    if (const auto* l = std::get_if<LineShape>(&shape)) {
      soa_.add_line(id, l->a.x, l->a.y, l->b.x - l->a.x, l->b.y - l->a.y);
    } else if (const auto* a = std::get_if<ArcShape>(&shape)) {
      const double from = a->sweep > 0.0 ? a->start_angle : a->start_angle + a->sweep;
      const double to = from + std::abs(a->sweep);
      soa_.add_arc(id, a->center.x, a->center.y, a->radius, std::cos(from), std::sin(from), std::cos(to),
                   std::sin(to), std::abs(a->sweep) > std::numbers::pi);
    } else {
      curves_.push_back(id);
    }
  }
  soa_.finalize();
}

std::vector<int> BilliardTable::openings() const {
  std::vector<int> out;
  for (int i = 0; i < segment_count(); ++i)
    if (segment(i).is_opening()) out.push_back(i);
  return out;
}

bool BilliardTable::has_opening() const {
  return std::any_of(segments_.begin(), segments_.end(), [](const auto& s) { return s.is_opening(); });
}

double BilliardTable::opening_width() const {
  double w = 0.0;
  for (const auto& s : segments_)
    if (s.is_opening()) w += s.length();
  return w;
}

double BilliardTable::wrap(double q) const {
  double r = std::fmod(q, perimeter_);
  if (r < 0.0) r += perimeter_;
  if (r >= perimeter_) r = 0.0;
  return r;
}

SegmentLocation BilliardTable::locate(double q) const {
  q = wrap(q);
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), q);
  const int i = static_cast<int>(it - offsets_.begin()) - 1;
  const auto& seg = segment(i);
  return {i, std::min(q - offsets_[static_cast<std::size_t>(i)], seg.length())};
}

Vec2 BilliardTable::point_at(double q) const {
  const auto loc = locate(q);
  return segment(loc.index).point_at(loc.s);
}

Vec2 BilliardTable::tangent_at(double q) const {
  const auto loc = locate(q);
  return segment(loc.index).tangent_at(loc.s);
}

double cosine_intersection(const CosineShape& wall, Vec2 o, Vec2 d, double t_min, double t_max) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Restrict t to the x-extent of the wall and to y >= base (the wall never dips below it).
  double lo = t_min;
  double hi = t_max;
  if (d.x != 0.0) {
    const double a = (0.0 - o.x) / d.x;
    const double b = (wall.length - o.x) / d.x;
    lo = std::max(lo, std::min(a, b));
    hi = std::min(hi, std::max(a, b));
  } else if (o.x < 0.0 || o.x > wall.length) {
    return kInf;
  }
  const double floor_y = std::min(wall.base, wall.base + wall.amplitude);
  if (d.y > 0.0) lo = std::max(lo, (floor_y - o.y) / d.y);
  else if (d.y < 0.0) hi = std::min(hi, (floor_y - o.y) / d.y);
  else if (o.y < floor_y) return kInf;
  if (!(lo < hi)) return kInf;

  // g(t) = y(t) - h(x(t)) < 0 inside. With |g''| <= M, the parabola
  // g + g' s + M s^2 / 2 bounds g from above, so stepping to its root never
  // jumps over a crossing.
  const double curvature = wall.curvature_bound() * d.x * d.x;
  auto g = [&](double t) { return o.y + t * d.y - wall.height(o.x + t * d.x); };
  auto dg = [&](double t) { return d.y - wall.slope(o.x + t * d.x) * d.x; };
  const double tol = 1e-15 * (wall.base + std::abs(wall.amplitude) + wall.length);

  double t = lo;
  double gt = g(t);
  if (gt > 0.0) return kInf;  // starts outside the wall's region of interest
  for (int iter = 0; iter < 400; ++iter) {
    if (gt > -tol) return t;
    const double slope = dg(t);
    const double root = std::sqrt(slope * slope - 2.0 * curvature * gt);
    double step;
    if (slope >= 0.0) {
      if (slope == 0.0 && curvature == 0.0) return kInf;
      step = -2.0 * gt / (slope + root);
    } else {
      if (curvature == 0.0) return kInf;
      step = (root - slope) / curvature;
    }
    const double next = t + step;
    if (next > hi) return kInf;
    if (next == t) return t;
    t = next;
    gt = g(t);
    if (gt > 0.0) {
      // Bound says g <= 0 here; a positive value is rounding at the root.
      return t;
    }
  }
  return t;
}

CollisionResult next_collision(Vec2 start, Vec2 dir, const BilliardTable& table, std::optional<int> exclude) {
  const double t_min = table.eps_len();
  kernels::Hit hit = kernels::nearest_hit(table.soa(), start.x, start.y, dir.x, dir.y, t_min);
  if (exclude && hit.id == *exclude && std::holds_alternative<LineShape>(table.segment(*exclude).shape()))
    hit = {std::numeric_limits<double>::infinity(), -1};
  for (int id : table.curve_segments()) {
    const auto& wall = std::get<CosineShape>(table.segment(id).shape());
    const double t = cosine_intersection(wall, start, dir, t_min, hit.t);
    if (t < hit.t) hit = {t, id};
  }

  CollisionResult result;
  if (hit.id < 0 || !std::isfinite(hit.t)) {
    result.status = HitStatus::NoIntersection;
    return result;
  }
  const auto& seg = table.segment(hit.id);
  CollisionEvent& ev = result.event;
  ev.segment = hit.id;
  ev.length = hit.t;
  ev.point = start + dir * hit.t;
  const double s = seg.arc_length_of(ev.point);
  const double eps = table.eps_corner();
  const int n = table.segment_count();
  if ((s < eps && table.corner_at_start(hit.id)) ||
      (seg.length() - s < eps && table.corner_at_start((hit.id + 1) % n))) {
    result.status = HitStatus::CornerHit;
  } else {
    result.status = HitStatus::Ok;
  }
  ev.q = table.wrap(table.offset(hit.id) + s);
  ev.tangent = seg.tangent_at(s);
  ev.normal = left_perp(ev.tangent);
  return result;
}

Vec2 reflect(Vec2 d, Vec2 n) { return d - n * (2.0 * dot(d, n)); }

BoundaryPhasePoint birkhoff_coords(const CollisionEvent& event, Vec2 outgoing, double p_max) {
  return {event.q, p_max * dot(outgoing, event.tangent)};
}

BoundaryRay ray_from_birkhoff(const BilliardTable& table, BoundaryPhasePoint x, double p_max) {
  const auto loc = table.locate(x.q);
  const auto& seg = table.segment(loc.index);
  const Vec2 tangent = seg.tangent_at(loc.s);
  const double along = x.p / p_max;
  const double across = std::sqrt(std::max(0.0, 1.0 - along * along));
  return {loc.index, seg.point_at(loc.s), tangent * along + left_perp(tangent) * across};
}

}  // namespace dwell
