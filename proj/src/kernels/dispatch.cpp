#include <atomic>

#include "dwell/kernels.hpp"

namespace dwell::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect() { return avx2_available() ? Isa::Avx2 : Isa::Scalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
  static const bool available = avx2::compiled() && cpu_has_avx2();
  return available;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_available()) isa = Isa::Scalar;
  current().store(isa);
}

void reset_isa() { current().store(detect()); }

Hit nearest_hit(const SegmentSoA& soa, double ox, double oy, double dx, double dy, double t_min) {
  if (active_isa() == Isa::Avx2) return avx2::nearest_hit(soa, ox, oy, dx, dy, t_min);
  return scalar::nearest_hit(soa, ox, oy, dx, dy, t_min);
}

GridSums grid_reduce(std::span<const std::uint32_t> visits, std::span<const std::int64_t> flight_fixed,
                     int fixed_shift) {
  if (active_isa() == Isa::Avx2) return avx2::grid_reduce(visits, flight_fixed, fixed_shift);
  return scalar::grid_reduce(visits, flight_fixed, fixed_shift);
}

}  // namespace dwell::kernels
