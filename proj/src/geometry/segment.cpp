#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "dwell/errors.hpp"
#include "dwell/geometry.hpp"

namespace dwell {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec2 unit_at(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

double CosineShape::height(double x) const {
  return base + 0.5 * amplitude * (1.0 - std::cos(kTwoPi * x / length));
}

double CosineShape::slope(double x) const {
  const double k = kTwoPi / length;
  return 0.5 * amplitude * k * std::sin(k * x);
}

double CosineShape::curvature_bound() const {
  const double k = kTwoPi / length;
  return 0.5 * std::abs(amplitude) * k * k;
}

// Cumulative arc length of the cosine wall measured from x = 0, tabulated at
// equally spaced nodes and completed with Gauss-Legendre on the last piece.
struct BoundarySegment::CosineArcTable {
  static constexpr int kNodes = 256;
  CosineShape shape;
  double dx = 0.0;
  std::array<double, kNodes + 1> cumulative{};

  double speed(double x) const {
    const double s = shape.slope(x);
    return std::sqrt(1.0 + s * s);
  }
  double integrate(double a, double b) const {
    return boost::math::quadrature::gauss<double, 20>::integrate([this](double x) { return speed(x); }, a, b);
  }
  explicit CosineArcTable(const CosineShape& c) : shape(c), dx(c.length / kNodes) {
    cumulative[0] = 0.0;
    for (int k = 0; k < kNodes; ++k) cumulative[k + 1] = cumulative[k] + integrate(k * dx, (k + 1) * dx);
  }
  double arc(double x) const {
    x = std::clamp(x, 0.0, shape.length);
    const int k = std::min(kNodes - 1, static_cast<int>(x / dx));
    return cumulative[k] + integrate(k * dx, x);
  }
  double x_of(double s) const {
    s = std::clamp(s, 0.0, cumulative[kNodes]);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const int k = std::clamp(static_cast<int>(it - cumulative.begin()) - 1, 0, kNodes - 1);
    double x = k * dx + dx * (s - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
    for (int iter = 0; iter < 8; ++iter) {
      const double step = (arc(x) - s) / speed(x);
      x = std::clamp(x - step, k * dx, (k + 1) * dx);
      if (std::abs(step) < 1e-15 * shape.length) break;
    }
    return x;
  }
};

BoundarySegment::BoundarySegment(Shape shape, SegmentRole role) : shape_(std::move(shape)), role_(role) {
  if (const auto* l = std::get_if<LineShape>(&shape_)) {
    length_ = norm(l->b - l->a);
  } else if (const auto* a = std::get_if<ArcShape>(&shape_)) {
    if (!(a->radius > 0.0)) throw InvalidParams("arc radius must be positive");
    length_ = a->radius * std::abs(a->sweep);
  } else {
    const auto& c = std::get<CosineShape>(shape_);
    if (!(c.length > 0.0) || !(c.base > 0.0)) throw InvalidParams("cosine wall needs positive length and base");
    cosine_table_ = std::make_shared<const CosineArcTable>(c);
    length_ = cosine_table_->cumulative.back();
  }
  if (!(length_ > 0.0)) throw InvalidParams("boundary segment must have positive length");
}

BoundarySegment BoundarySegment::line(Vec2 a, Vec2 b, SegmentRole role) {
  return BoundarySegment(LineShape{a, b}, role);
}

BoundarySegment BoundarySegment::arc(Vec2 center, double radius, double start_angle, double sweep) {
  return BoundarySegment(ArcShape{center, radius, start_angle, sweep}, SegmentRole::Wall);
}

BoundarySegment BoundarySegment::cosine(double length, double base, double amplitude) {
  return BoundarySegment(CosineShape{length, base, amplitude}, SegmentRole::Wall);
}

double BoundarySegment::cosine_arc_from_left(double x) const { return cosine_table_->arc(x); }
double BoundarySegment::cosine_x_from_left_arc(double s) const { return cosine_table_->x_of(s); }

Vec2 BoundarySegment::point_at(double s) const {
  if (const auto* l = std::get_if<LineShape>(&shape_)) {
    if (s >= length_) return l->b;
    return l->a + (l->b - l->a) * (s / length_);
  }
  if (const auto* a = std::get_if<ArcShape>(&shape_)) {
    const double phi = a->start_angle + std::copysign(s / a->radius, a->sweep);
    return a->center + a->radius * unit_at(phi);
  }
  const auto& c = std::get<CosineShape>(shape_);
  const double x = cosine_x_from_left_arc(length_ - s);
  return {x, c.height(x)};
}

Vec2 BoundarySegment::tangent_at(double s) const {
  if (const auto* l = std::get_if<LineShape>(&shape_)) return (l->b - l->a) / length_;
  if (const auto* a = std::get_if<ArcShape>(&shape_)) {
    const double phi = a->start_angle + std::copysign(s / a->radius, a->sweep);
    const Vec2 ccw{-std::sin(phi), std::cos(phi)};
    return a->sweep > 0.0 ? ccw : -ccw;
  }
  const auto& c = std::get<CosineShape>(shape_);
  const double slope = c.slope(cosine_x_from_left_arc(length_ - s));
  return Vec2{-1.0, -slope} / std::sqrt(1.0 + slope * slope);
}

double BoundarySegment::arc_length_of(Vec2 p) const {
  if (const auto* l = std::get_if<LineShape>(&shape_)) {
    const Vec2 e = l->b - l->a;
    return std::clamp(dot(p - l->a, e) / length_, 0.0, length_);
  }
  if (const auto* a = std::get_if<ArcShape>(&shape_)) {
    const Vec2 w = p - a->center;
    const double phi = std::atan2(w.y, w.x);
    double delta = std::remainder((phi - a->start_angle) * (a->sweep > 0.0 ? 1.0 : -1.0), kTwoPi);
    // remainder() gives (-pi, pi]; points past the start belong at the front of the arc.
    const double span = std::abs(a->sweep);
    if (delta < 0.0) {
      const double wrapped = delta + kTwoPi;
      // Slightly before the start: clamp to 0 unless the arc extends that far.
      if (wrapped <= span) delta = wrapped;
      else if (-delta > (kTwoPi - span) * 0.5) delta = wrapped;
    }
    return std::clamp(delta * a->radius, 0.0, length_);
  }
  return length_ - cosine_arc_from_left(p.x);
}

double BoundarySegment::area_term() const {
  if (const auto* l = std::get_if<LineShape>(&shape_)) return 0.5 * cross(l->a, l->b);
  if (const auto* a = std::get_if<ArcShape>(&shape_)) {
    const double p0 = a->start_angle;
    const double p1 = a->start_angle + a->sweep;
    const double r = a->radius;
    return 0.5 * (r * (a->center.x * (std::sin(p1) - std::sin(p0)) - a->center.y * (std::cos(p1) - std::cos(p0))) +
                  r * r * a->sweep);
  }
  const auto& c = std::get<CosineShape>(shape_);
  return 0.5 * c.length * (c.base + c.amplitude);
}

}  // namespace dwell
