#include <cmath>
#include <numbers>
#include <set>

#include "dwell/errors.hpp"
#include "dwell/geometry.hpp"

namespace dwell {
namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParams(what);
}

/// Straight side from a to b with a centred opening of width w; zero-length pieces are dropped.
void add_side_with_opening(std::vector<BoundarySegment>& out, Vec2 a, Vec2 b, double w) {
  const double len = norm(b - a);
  const Vec2 u = (b - a) / len;
  const Vec2 o0 = a + u * (0.5 * (len - w));
  const Vec2 o1 = a + u * (0.5 * (len + w));
  if (w <= 0.0) {
    out.push_back(BoundarySegment::line(a, b));
    return;
  }
  if (len - w > 0.0) out.push_back(BoundarySegment::line(a, o0));
  out.push_back(BoundarySegment::line(w < len ? o0 : a, w < len ? o1 : b, SegmentRole::Opening));
  if (len - w > 0.0) out.push_back(BoundarySegment::line(o1, b));
}

}  // namespace

BilliardTable make_circle(double radius, double w) {
  require(radius > 0.0, "circle: radius must be positive");
  require(w >= 0.0 && w < 2.0 * radius, "circle: opening width must lie in [0, 2R)");
  std::vector<BoundarySegment> segs;
  if (w == 0.0) {
    segs.push_back(BoundarySegment::arc({0.0, 0.0}, radius, 0.0, 2.0 * kPi));
  } else {
    const double alpha = std::asin(0.5 * w / radius);
    segs.push_back(BoundarySegment::arc({0.0, 0.0}, radius, alpha, 2.0 * kPi - 2.0 * alpha));
    const double x = radius * std::cos(alpha);
    segs.push_back(BoundarySegment::line({x, -0.5 * w}, {x, 0.5 * w}, SegmentRole::Opening));
  }
  return BilliardTable(std::move(segs), "circle");
}

BilliardTable make_rectangle(double a, double b, double w) {
  require(a > 0.0 && b > 0.0, "rectangle: sides must be positive");
  require(w >= 0.0 && w <= b, "rectangle: opening wider than the left side");
  std::vector<BoundarySegment> segs;
  segs.push_back(BoundarySegment::line({0.0, 0.0}, {a, 0.0}));
  segs.push_back(BoundarySegment::line({a, 0.0}, {a, b}));
  segs.push_back(BoundarySegment::line({a, b}, {0.0, b}));
  add_side_with_opening(segs, {0.0, b}, {0.0, 0.0}, w);
  return BilliardTable(std::move(segs), "rectangle");
}

BilliardTable make_stadium(double s, double r, double w) {
  require(s > 0.0 && r > 0.0, "stadium: straight length and radius must be positive");
  require(w >= 0.0 && w <= s, "stadium: opening wider than the straight wall");
  std::vector<BoundarySegment> segs;
  add_side_with_opening(segs, {-0.5 * s, -r}, {0.5 * s, -r}, w);
  segs.push_back(BoundarySegment::arc({0.5 * s, 0.0}, r, -0.5 * kPi, kPi));
  segs.push_back(BoundarySegment::line({0.5 * s, r}, {-0.5 * s, r}));
  segs.push_back(BoundarySegment::arc({-0.5 * s, 0.0}, r, 0.5 * kPi, kPi));
  return BilliardTable(std::move(segs), "stadium");
}

BilliardTable make_mushroom(double cap_radius, double stem_width, double stem_depth, double w) {
  require(cap_radius > 0.0 && stem_width > 0.0 && stem_depth > 0.0, "mushroom: dimensions must be positive");
  require(stem_width < 2.0 * cap_radius, "mushroom: stem must be narrower than the cap");
  require(w >= 0.0 && w <= stem_width, "mushroom: opening wider than the stem foot");
  const double h = 0.5 * stem_width;
  std::vector<BoundarySegment> segs;
  add_side_with_opening(segs, {-h, -stem_depth}, {h, -stem_depth}, w);
  segs.push_back(BoundarySegment::line({h, -stem_depth}, {h, 0.0}));
  segs.push_back(BoundarySegment::line({h, 0.0}, {cap_radius, 0.0}));
  segs.push_back(BoundarySegment::arc({0.0, 0.0}, cap_radius, 0.0, kPi));
  segs.push_back(BoundarySegment::line({-cap_radius, 0.0}, {-h, 0.0}));
  segs.push_back(BoundarySegment::line({-h, 0.0}, {-h, -stem_depth}));
  return BilliardTable(std::move(segs), "mushroom");
}

BilliardTable make_cosine_channel(double length, double base_height, double amplitude, double w) {
  require(length > 0.0 && base_height > 0.0, "cosine: length and base height must be positive");
  require(amplitude >= 0.0, "cosine: amplitude must be non-negative");
  require(w >= 0.0 && w <= base_height, "cosine: opening taller than the channel end");
  std::vector<BoundarySegment> segs;
  segs.push_back(BoundarySegment::line({0.0, 0.0}, {length, 0.0}));
  segs.push_back(BoundarySegment::line({length, 0.0}, {length, base_height}));
  segs.push_back(BoundarySegment::cosine(length, base_height, amplitude));
  add_side_with_opening(segs, {0.0, base_height}, {0.0, 0.0}, w);
  return BilliardTable(std::move(segs), "cosine");
}

BilliardTable build_table(const TableSpec& spec) {
  std::set<std::string> used;
  auto get = [&](const char* key) {
    const auto it = spec.params.find(key);
    if (it == spec.params.end()) throw InvalidParams(spec.family + ": missing parameter '" + key + "'");
    used.insert(key);
    return it->second;
  };
  auto opening = [&] {
    used.insert("opening_width");
    const auto it = spec.params.find("opening_width");
    return it == spec.params.end() ? 0.0 : it->second;
  };

  auto build = [&]() -> BilliardTable {
    if (spec.family == "circle") return make_circle(get("radius"), opening());
    if (spec.family == "rectangle") return make_rectangle(get("width"), get("height"), opening());
    if (spec.family == "stadium") return make_stadium(get("straight"), get("radius"), opening());
    if (spec.family == "mushroom")
      return make_mushroom(get("cap_radius"), get("stem_width"), get("stem_depth"), opening());
    if (spec.family == "cosine")
      return make_cosine_channel(get("length"), get("base_height"), get("amplitude"), opening());
    throw InvalidParams("unknown table family '" + spec.family + "'");
  };
  BilliardTable table = build();
  for (const auto& [key, value] : spec.params)
    if (!used.count(key)) throw InvalidParams(spec.family + ": unknown parameter '" + key + "'");
  return table;
}

}  // namespace dwell
