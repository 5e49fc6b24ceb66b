#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace dwell {

enum class Method { Analytic, MonteCarlo, BoxCounting, Quadrature };

std::string_view to_string(Method m);

/// A measured or computed quantity with its uncertainty.
struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  Method method = Method::Analytic;

  static MeasureEstimate analytic(double v) { return {v, 0.0, 0, Method::Analytic}; }
  double relative_error() const;
};

/// (a - b) / sqrt(sa^2 + sb^2). Infinite when both errors vanish and a != b; zero when a == b.
double z_score(const MeasureEstimate& a, const MeasureEstimate& b);

/// Ratio a/b with first-order error propagation (inputs treated as independent).
MeasureEstimate ratio(const MeasureEstimate& a, const MeasureEstimate& b);

/// Pairwise (cascade) summation. The association order depends only on the length.
double pairwise_sum(std::span<const double> xs);

/// First and second moments of one block of samples, summed in index order.
struct Moments {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
};

/// Combines per-block moments with pairwise summation; result does not depend on
/// which worker produced which block.
MeasureEstimate mean_estimate(std::span<const Moments> blocks, Method method = Method::MonteCarlo);

/// Number of workers to use when the caller passes 0.
unsigned default_workers();

/// Runs fn(block, begin, end) over [0, n) in fixed-size blocks on `workers` threads.
/// Block boundaries depend only on n and block_size.
void for_each_block(std::uint64_t n, std::uint64_t block_size, unsigned workers,
                    const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)>& fn);

/// As for_each_block, but also passes the worker slot in [0, effective_workers)
/// so callers can keep per-worker state. Returns the number of slots used.
unsigned for_each_block_on_workers(
    std::uint64_t n, std::uint64_t block_size, unsigned workers,
    const std::function<void(unsigned, std::uint64_t, std::uint64_t, std::uint64_t)>& fn);

/// Number of worker slots for_each_block_on_workers will use.
unsigned effective_workers(std::uint64_t n, std::uint64_t block_size, unsigned workers);

inline std::uint64_t block_count(std::uint64_t n, std::uint64_t block_size) {
  return (n + block_size - 1) / block_size;
}

}  // namespace dwell
