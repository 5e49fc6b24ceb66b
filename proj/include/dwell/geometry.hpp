#pragma once

// Exact 2D billiard geometry. Boundaries are closed chains of straight
// segments, circular arcs and (for the cosine channel) one cosine-profile wall,
// traversed counterclockwise so the inward normal is the left perpendicular of
// the tangent. Arc length q along this chain is the Birkhoff position
// coordinate.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dwell/kernels.hpp"
#include "dwell/vec2.hpp"

namespace dwell {

enum class SegmentRole { Wall, Opening };

struct LineShape {
  Vec2 a;
  Vec2 b;
};

/// Circle arc starting at `start_angle`; positive sweep runs counterclockwise
/// (boundary convex toward the outside), negative sweep clockwise.
struct ArcShape {
  Vec2 center;
  double radius = 1.0;
  double start_angle = 0.0;
  double sweep = 0.0;
};

/// Upper wall y = base + amplitude * (1 - cos(2 pi x / length)) / 2 for
/// x in [0, length], traversed from x = length to x = 0.
struct CosineShape {
  double length = 1.0;
  double base = 1.0;
  double amplitude = 0.0;

  double height(double x) const;
  double slope(double x) const;
  double curvature_bound() const;  ///< max |y''|
};

class BoundarySegment {
 public:
  using Shape = std::variant<LineShape, ArcShape, CosineShape>;

  static BoundarySegment line(Vec2 a, Vec2 b, SegmentRole role = SegmentRole::Wall);
  static BoundarySegment arc(Vec2 center, double radius, double start_angle, double sweep);
  static BoundarySegment cosine(double length, double base, double amplitude);

  const Shape& shape() const { return shape_; }
  SegmentRole role() const { return role_; }
  bool is_opening() const { return role_ == SegmentRole::Opening; }

  double length() const { return length_; }
  Vec2 start() const { return point_at(0.0); }
  Vec2 end() const { return point_at(length_); }
  /// Point at arc length s from the segment start.
  Vec2 point_at(double s) const;
  /// Unit tangent along the traversal direction at arc length s.
  Vec2 tangent_at(double s) const;
  /// Arc length of the boundary point nearest to p, clamped to [0, length].
  double arc_length_of(Vec2 p) const;
  /// Contribution of this segment to the shoelace integral (1/2) * loop integral of (x dy - y dx).
  double area_term() const;

 private:
  BoundarySegment(Shape shape, SegmentRole role);

  struct CosineArcTable;
  double cosine_arc_from_left(double x) const;
  double cosine_x_from_left_arc(double s) const;

  Shape shape_;
  SegmentRole role_;
  double length_ = 0.0;
  std::shared_ptr<const CosineArcTable> cosine_table_;
};

/// Birkhoff coordinates: q is arc length along the closed boundary, p the
/// tangential momentum of the outgoing velocity.
struct BoundaryPhasePoint {
  double q = 0.0;
  double p = 0.0;
};

struct SegmentLocation {
  int index = 0;
  double s = 0.0;  ///< arc length within the segment
};

class BilliardTable {
 public:
  /// Validates closure, segment sizes, straight openings and (by sampling) that
  /// the chain does not intersect itself. Throws InvalidParams.
  explicit BilliardTable(std::vector<BoundarySegment> segments, std::string family = "custom");

  const std::string& family() const { return family_; }
  std::span<const BoundarySegment> segments() const { return segments_; }
  const BoundarySegment& segment(int i) const { return segments_[static_cast<std::size_t>(i)]; }
  int segment_count() const { return static_cast<int>(segments_.size()); }

  double perimeter() const { return perimeter_; }
  double area() const { return area_; }
  double diameter() const { return diameter_; }
  /// Minimum accepted flight length.
  double eps_len() const { return 1e-9 * diameter_; }
  /// Junction neighbourhood (in arc length) treated as a corner hit.
  double eps_corner() const { return 1e-9 * perimeter_; }

  /// Arc length at which segment i begins.
  double offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  std::vector<int> openings() const;
  bool has_opening() const;
  /// Summed width of all openings.
  double opening_width() const;

  /// Whether the junction at the start of segment i has a tangent discontinuity.
  bool corner_at_start(int i) const { return corner_at_start_[static_cast<std::size_t>(i)] != 0; }

  /// Wraps q into [0, perimeter).
  double wrap(double q) const;
  SegmentLocation locate(double q) const;
  Vec2 point_at(double q) const;
  Vec2 tangent_at(double q) const;

  const kernels::SegmentSoA& soa() const { return soa_; }
  std::span<const int> curve_segments() const { return curves_; }

 private:
  std::vector<BoundarySegment> segments_;
  std::string family_;
  std::vector<double> offsets_;
  std::vector<char> corner_at_start_;
  std::vector<int> curves_;
  kernels::SegmentSoA soa_;
  double perimeter_ = 0.0;
  double area_ = 0.0;
  double diameter_ = 0.0;
};

struct CollisionEvent {
  int segment = -1;
  Vec2 point;
  double q = 0.0;
  Vec2 normal;   ///< inward unit normal
  Vec2 tangent;  ///< unit tangent along increasing q
  double length = 0.0;  ///< flight length from the ray origin
};

enum class HitStatus { Ok, CornerHit, NoIntersection };

struct CollisionResult {
  HitStatus status = HitStatus::NoIntersection;
  CollisionEvent event;

  bool ok() const { return status == HitStatus::Ok; }
};

/// Nearest boundary intersection of the ray start + t*direction with
/// t > eps_len. `exclude` names the segment the ray starts on; a straight
/// segment cannot be hit again and is skipped.
CollisionResult next_collision(Vec2 start, Vec2 direction, const BilliardTable& table,
                               std::optional<int> exclude = std::nullopt);

/// Specular reflection d - 2 (d.n) n.
Vec2 reflect(Vec2 direction, Vec2 normal);

/// Encodes an outgoing direction at a collision as (q, p).
BoundaryPhasePoint birkhoff_coords(const CollisionEvent& event, Vec2 outgoing, double p_max);

/// Outgoing ray reconstructed from Birkhoff coordinates.
struct BoundaryRay {
  int segment = -1;
  Vec2 point;
  Vec2 direction;
};
BoundaryRay ray_from_birkhoff(const BilliardTable& table, BoundaryPhasePoint x, double p_max);

/// Intersection of a ray with the cosine wall (first crossing from below with
/// t in (t_min, t_max)). Exposed for testing; returns +inf when there is none.
double cosine_intersection(const CosineShape& wall, Vec2 origin, Vec2 direction, double t_min,
                           double t_max);

// ---------------------------------------------------------------------------
// Built-in families. Each carries one centred straight opening of width w;
// w = 0 builds the closed table.

/// Disc of radius R cut by a chord of length w on the right.
BilliardTable make_circle(double radius, double opening_width);
/// [0,a] x [0,b] with the opening centred on the left side.
BilliardTable make_rectangle(double width, double height, double opening_width);
/// Bunimovich stadium: straight length s, cap radius r, opening centred on the bottom wall.
BilliardTable make_stadium(double straight, double radius, double opening_width);
/// Semicircular cap of radius R_c over a stem of width w_s and depth d_s; the opening is centred on the stem foot.
BilliardTable make_mushroom(double cap_radius, double stem_width, double stem_depth, double opening_width);
/// Channel [0, L_x] with flat floor, cosine ceiling of base height d and amplitude a; opening on the left end.
BilliardTable make_cosine_channel(double length, double base_height, double amplitude, double opening_width);

/// Family name plus named parameters, as read from configuration.
struct TableSpec {
  std::string family;
  std::map<std::string, double> params;
};

BilliardTable build_table(const TableSpec& spec);

}  // namespace dwell
