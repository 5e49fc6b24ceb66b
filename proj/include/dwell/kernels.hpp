#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// dwell::kernels::scalar and, on x86-64, an AVX2 variant in dwell::kernels::avx2.
// The variants evaluate the same expressions in the same order without FMA
// contraction, so results agree bit for bit; the dispatcher picks one at runtime.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dwell::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Whether this binary was built with the AVX2 variant and the CPU supports it.
bool avx2_available();
/// The ISA used by the dispatching entry points below.
Isa active_isa();
/// Pins dispatch to one ISA (falls back to Scalar if the request is unavailable).
void force_isa(Isa isa);
/// Returns to automatic selection.
void reset_isa();

constexpr std::size_t kLanes = 4;

/// Ray-intersection data for straight segments and circular arcs in
/// structure-of-arrays form, padded to a multiple of kLanes with NaN entries
/// that never produce a hit.
struct SegmentSoA {
  // Lines: start point and edge vector (end - start).
  std::vector<double> line_ax, line_ay, line_ex, line_ey;
  std::vector<int> line_id;
  // Arcs: center, radius squared, unit vectors at both ends of the
  // counterclockwise angular range, and 1.0 when that range exceeds pi.
  std::vector<double> arc_cx, arc_cy, arc_r2, arc_r, arc_u0x, arc_u0y, arc_u1x, arc_u1y, arc_major;
  std::vector<int> arc_id;

  std::size_t line_count = 0;
  std::size_t arc_count = 0;

  void add_line(int id, double ax, double ay, double ex, double ey);
  void add_arc(int id, double cx, double cy, double r, double u0x, double u0y, double u1x, double u1y,
               bool major);
  /// Pads every array to a multiple of kLanes. Call once after the last add.
  void finalize();
};

struct Hit {
  double t = 0.0;
  int id = -1;  ///< segment id from add_line/add_arc, -1 when nothing was hit
};

/// Relative slack on the segment parameter and the arc angular-range test, so a
/// ray through a junction is caught by at least one of the two segments.
inline constexpr double kParamSlack = 1e-12;

/// Smallest t > t_min at which origin + t*dir meets a line or arc. Ties go to
/// the lower slot (lines before arcs, insertion order within each).
Hit nearest_hit(const SegmentSoA& soa, double ox, double oy, double dx, double dy, double t_min);

/// Coverage-grid reduction over cells with visits > 0.
struct GridSums {
  std::uint64_t occupied = 0;
  /// Sum over occupied cells of flight_fixed / (visits * 2^fixed_shift).
  double mean_flight_sum = 0.0;
};

/// visits and flight_fixed have equal length. flight_fixed holds non-negative
/// fixed-point sums below 2^52. Summation uses kLanes interleaved partial sums
/// combined as (s0 + s1) + (s2 + s3).
GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift);

namespace scalar {
Hit nearest_hit(const SegmentSoA& soa, double ox, double oy, double dx, double dy, double t_min);
GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift);
}  // namespace scalar

namespace avx2 {
bool compiled();
Hit nearest_hit(const SegmentSoA& soa, double ox, double oy, double dx, double dy, double t_min);
GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift);
}  // namespace avx2

}  // namespace dwell::kernels
