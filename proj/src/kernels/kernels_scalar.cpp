#include <cmath>
#include <limits>

#include "dwell/kernels.hpp"

namespace dwell::kernels::scalar {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double line_candidate(const SegmentSoA& s, std::size_t i, double ox, double oy, double dx,
                             double dy, double t_min) {
  const double ex = s.line_ex[i];
  const double ey = s.line_ey[i];
  const double denom = dx * ey - dy * ex;
  const double wx = s.line_ax[i] - ox;
  const double wy = s.line_ay[i] - oy;
  const double t = (wx * ey - wy * ex) / denom;
  const double u = (wx * dy - wy * dx) / denom;
  const bool ok = t > t_min && u >= -kParamSlack && u <= 1.0 + kParamSlack;
  return ok ? t : kInf;
}

inline bool on_arc(const SegmentSoA& s, std::size_t i, double wx, double wy) {
  const double slack = kParamSlack * s.arc_r[i];
  const double c0 = s.arc_u0x[i] * wy - s.arc_u0y[i] * wx;
  const double c1 = wx * s.arc_u1y[i] - wy * s.arc_u1x[i];
  const bool a = c0 >= -slack;
  const bool b = c1 >= -slack;
  return s.arc_major[i] == 1.0 ? (a || b) : (a && b);
}

inline double arc_candidate(const SegmentSoA& s, std::size_t i, double ox, double oy, double dx,
                            double dy, double t_min) {
  const double fx = ox - s.arc_cx[i];
  const double fy = oy - s.arc_cy[i];
  const double b = fx * dx + fy * dy;
  const double c = (fx * fx + fy * fy) - s.arc_r2[i];
  const double disc = b * b - c;
  if (!(disc >= 0.0)) return kInf;
  // Stable roots of t^2 + 2bt + c = 0.
  const double q = -(b + std::copysign(std::sqrt(disc), b));
  const double t1 = q;
  const double t2 = c / q;
  double best = kInf;
  if (t1 > t_min && on_arc(s, i, fx + t1 * dx, fy + t1 * dy)) best = t1;
  if (t2 > t_min && on_arc(s, i, fx + t2 * dx, fy + t2 * dy) && t2 < best) best = t2;
  return best;
}

}  // namespace

Hit nearest_hit(const SegmentSoA& s, double ox, double oy, double dx, double dy, double t_min) {
  double best = kInf;
  int id = -1;
  for (std::size_t i = 0; i < s.line_ax.size(); ++i) {
    const double t = line_candidate(s, i, ox, oy, dx, dy, t_min);
    if (t < best) {
      best = t;
      id = s.line_id[i];
    }
  }
  for (std::size_t i = 0; i < s.arc_cx.size(); ++i) {
    const double t = arc_candidate(s, i, ox, oy, dx, dy, t_min);
    if (t < best) {
      best = t;
      id = s.arc_id[i];
    }
  }
  return {best, id};
}

GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift) {
  const double scale = std::ldexp(1.0, -fixed_shift);
  double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
  GridSums out;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    if (visits[i] == 0) continue;
    ++out.occupied;
    lane[i % kLanes] += (static_cast<double>(flight_fixed[i]) * scale) / static_cast<double>(visits[i]);
  }
  out.mean_flight_sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  return out;
}

}  // namespace dwell::kernels::scalar
