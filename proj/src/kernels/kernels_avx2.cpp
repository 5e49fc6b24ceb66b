// Compiled with -mavx2 (no -mfma). Mirrors kernels_scalar.cpp expression by expression.

#include <cmath>
#include <limits>

#include "dwell/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#define DWELL_AVX2_BUILD 1
#else
#define DWELL_AVX2_BUILD 0
#endif

namespace dwell::kernels::avx2 {

#if DWELL_AVX2_BUILD

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline __m256d copysign_pd(__m256d magnitude, __m256d sign_source) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  return _mm256_or_pd(_mm256_andnot_pd(sign_mask, magnitude), _mm256_and_pd(sign_mask, sign_source));
}

inline __m256d on_arc(__m256d wx, __m256d wy, __m256d u0x, __m256d u0y, __m256d u1x, __m256d u1y,
                      __m256d neg_slack, __m256d major) {
  const __m256d c0 = _mm256_sub_pd(_mm256_mul_pd(u0x, wy), _mm256_mul_pd(u0y, wx));
  const __m256d c1 = _mm256_sub_pd(_mm256_mul_pd(wx, u1y), _mm256_mul_pd(wy, u1x));
  const __m256d a = _mm256_cmp_pd(c0, neg_slack, _CMP_GE_OQ);
  const __m256d b = _mm256_cmp_pd(c1, neg_slack, _CMP_GE_OQ);
  const __m256d is_major = _mm256_cmp_pd(major, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  return _mm256_blendv_pd(_mm256_and_pd(a, b), _mm256_or_pd(a, b), is_major);
}

/// Per-lane running minimum with strict-less update, so each lane keeps its lowest slot on ties.
inline void update_best(__m256d cand, __m256d slot, __m256d& best, __m256d& best_slot) {
  const __m256d better = _mm256_cmp_pd(cand, best, _CMP_LT_OQ);
  best = _mm256_blendv_pd(best, cand, better);
  best_slot = _mm256_blendv_pd(best_slot, slot, better);
}

/// Horizontal minimum; ties resolved to the lowest slot.
inline void reduce_lanes(__m256d best, __m256d best_slot, double& t, double& slot) {
  alignas(32) double tv[kLanes];
  alignas(32) double sv[kLanes];
  _mm256_store_pd(tv, best);
  _mm256_store_pd(sv, best_slot);
  t = kInf;
  slot = -1.0;
  for (std::size_t l = 0; l < kLanes; ++l) {
    if (tv[l] < t || (tv[l] == t && tv[l] != kInf && sv[l] < slot)) {
      t = tv[l];
      slot = sv[l];
    }
  }
}

}  // namespace

bool compiled() { return true; }

Hit nearest_hit(const SegmentSoA& s, double ox_, double oy_, double dx_, double dy_, double t_min_) {
  const __m256d ox = _mm256_set1_pd(ox_);
  const __m256d oy = _mm256_set1_pd(oy_);
  const __m256d dx = _mm256_set1_pd(dx_);
  const __m256d dy = _mm256_set1_pd(dy_);
  const __m256d t_min = _mm256_set1_pd(t_min_);
  const __m256d inf = _mm256_set1_pd(kInf);
  const __m256d lane_offsets = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);

  double line_t = kInf;
  double line_slot = -1.0;
  if (s.line_count > 0) {
    const __m256d lo = _mm256_set1_pd(-kParamSlack);
    const __m256d hi = _mm256_set1_pd(1.0 + kParamSlack);
    __m256d best = inf;
    __m256d best_slot = _mm256_set1_pd(-1.0);
    for (std::size_t i = 0; i < s.line_ax.size(); i += kLanes) {
      const __m256d ex = _mm256_loadu_pd(&s.line_ex[i]);
      const __m256d ey = _mm256_loadu_pd(&s.line_ey[i]);
      const __m256d denom = _mm256_sub_pd(_mm256_mul_pd(dx, ey), _mm256_mul_pd(dy, ex));
      const __m256d wx = _mm256_sub_pd(_mm256_loadu_pd(&s.line_ax[i]), ox);
      const __m256d wy = _mm256_sub_pd(_mm256_loadu_pd(&s.line_ay[i]), oy);
      const __m256d t =
          _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(wx, ey), _mm256_mul_pd(wy, ex)), denom);
      const __m256d u =
          _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(wx, dy), _mm256_mul_pd(wy, dx)), denom);
      const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(t, t_min, _CMP_GT_OQ),
                                       _mm256_and_pd(_mm256_cmp_pd(u, lo, _CMP_GE_OQ),
                                                     _mm256_cmp_pd(u, hi, _CMP_LE_OQ)));
      const __m256d cand = _mm256_blendv_pd(inf, t, ok);
      update_best(cand, _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), lane_offsets), best,
                  best_slot);
    }
    reduce_lanes(best, best_slot, line_t, line_slot);
  }

  double arc_t = kInf;
  double arc_slot = -1.0;
  if (s.arc_count > 0) {
    __m256d best = inf;
    __m256d best_slot = _mm256_set1_pd(-1.0);
    for (std::size_t i = 0; i < s.arc_cx.size(); i += kLanes) {
      const __m256d fx = _mm256_sub_pd(ox, _mm256_loadu_pd(&s.arc_cx[i]));
      const __m256d fy = _mm256_sub_pd(oy, _mm256_loadu_pd(&s.arc_cy[i]));
      const __m256d b = _mm256_add_pd(_mm256_mul_pd(fx, dx), _mm256_mul_pd(fy, dy));
      const __m256d c = _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(fx, fx), _mm256_mul_pd(fy, fy)),
                                      _mm256_loadu_pd(&s.arc_r2[i]));
      const __m256d disc = _mm256_sub_pd(_mm256_mul_pd(b, b), c);
      const __m256d has_root = _mm256_cmp_pd(disc, _mm256_setzero_pd(), _CMP_GE_OQ);
      const __m256d q = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_add_pd(b, copysign_pd(_mm256_sqrt_pd(disc), b)));
      const __m256d t1 = q;
      const __m256d t2 = _mm256_div_pd(c, q);

      const __m256d u0x = _mm256_loadu_pd(&s.arc_u0x[i]);
      const __m256d u0y = _mm256_loadu_pd(&s.arc_u0y[i]);
      const __m256d u1x = _mm256_loadu_pd(&s.arc_u1x[i]);
      const __m256d u1y = _mm256_loadu_pd(&s.arc_u1y[i]);
      const __m256d major = _mm256_loadu_pd(&s.arc_major[i]);
      const __m256d neg_slack =
          _mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(_mm256_set1_pd(kParamSlack), _mm256_loadu_pd(&s.arc_r[i])));

      const __m256d in1 = on_arc(_mm256_add_pd(fx, _mm256_mul_pd(t1, dx)), _mm256_add_pd(fy, _mm256_mul_pd(t1, dy)),
                                 u0x, u0y, u1x, u1y, neg_slack, major);
      const __m256d in2 = on_arc(_mm256_add_pd(fx, _mm256_mul_pd(t2, dx)), _mm256_add_pd(fy, _mm256_mul_pd(t2, dy)),
                                 u0x, u0y, u1x, u1y, neg_slack, major);
      const __m256d ok1 = _mm256_and_pd(has_root, _mm256_and_pd(_mm256_cmp_pd(t1, t_min, _CMP_GT_OQ), in1));
      const __m256d ok2 = _mm256_and_pd(has_root, _mm256_and_pd(_mm256_cmp_pd(t2, t_min, _CMP_GT_OQ), in2));
      const __m256d cand = _mm256_min_pd(_mm256_blendv_pd(inf, t1, ok1), _mm256_blendv_pd(inf, t2, ok2));
      update_best(cand, _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), lane_offsets), best,
                  best_slot);
    }
    reduce_lanes(best, best_slot, arc_t, arc_slot);
  }

  Hit hit{kInf, -1};
  if (line_slot >= 0.0) hit = {line_t, s.line_id[static_cast<std::size_t>(line_slot)]};
  if (arc_slot >= 0.0 && arc_t < hit.t) hit = {arc_t, s.arc_id[static_cast<std::size_t>(arc_slot)]};
  return hit;
}

GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift) {
  const double scale_s = std::ldexp(1.0, -fixed_shift);
  const __m256d scale = _mm256_set1_pd(scale_s);
  // int64 -> double for 0 <= v < 2^52: OR into the mantissa of 2^52, subtract 2^52.
  const __m256i magic_bits = _mm256_set1_epi64x(0x4330000000000000LL);
  const __m256d magic = _mm256_set1_pd(0x1.0p52);
  __m256d acc = _mm256_setzero_pd();
  GridSums out;
  std::size_t i = 0;
  const std::size_t n = visits.size();
  for (; i + kLanes <= n; i += kLanes) {
    const __m128i v32 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&visits[i]));
    const __m256d v = _mm256_cvtepi32_pd(v32);
    const __m256i f = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(&flight_fixed[i]));
    const __m256d fd = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(f, magic_bits)), magic);
    const __m256d occupied = _mm256_cmp_pd(v, _mm256_setzero_pd(), _CMP_GT_OQ);
    const __m256d term = _mm256_div_pd(_mm256_mul_pd(fd, scale), v);
    acc = _mm256_add_pd(acc, _mm256_and_pd(term, occupied));
    out.occupied += static_cast<std::uint64_t>(__builtin_popcount(_mm256_movemask_pd(occupied)));
  }
  alignas(32) double lane[kLanes];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) {
    if (visits[i] == 0) continue;
    ++out.occupied;
    lane[i % kLanes] += (static_cast<double>(flight_fixed[i]) * scale_s) / static_cast<double>(visits[i]);
  }
  out.mean_flight_sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  return out;
}

#else

bool compiled() { return false; }
Hit nearest_hit(const SegmentSoA& s, double ox, double oy, double dx, double dy, double t_min) {
  return scalar::nearest_hit(s, ox, oy, dx, dy, t_min);
}
GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift) {
  return scalar::grid_reduce(visits, flight_fixed, fixed_shift);
}

#endif

}  // namespace dwell::kernels::avx2
