#include "dwell/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace dwell {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Analytic: return "analytic";
    case Method::MonteCarlo: return "monte-carlo";
    case Method::BoxCounting: return "box-counting";
    case Method::Quadrature: return "quadrature";
  }
  return "unknown";
}

double MeasureEstimate::relative_error() const {
  if (value == 0.0) return std_error == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std_error / std::abs(value);
}

double z_score(const MeasureEstimate& a, const MeasureEstimate& b) {
  const double diff = a.value - b.value;
  const double sigma = std::hypot(a.std_error, b.std_error);
  if (sigma == 0.0) {
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return diff / sigma;
}

MeasureEstimate ratio(const MeasureEstimate& a, const MeasureEstimate& b) {
  MeasureEstimate r;
  r.value = a.value / b.value;
  r.std_error = std::abs(r.value) * std::hypot(a.relative_error(), b.relative_error());
  r.n_samples = std::max(a.n_samples, b.n_samples);
  r.method = a.method != Method::Analytic ? a.method : b.method;
  return r;
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

MeasureEstimate mean_estimate(std::span<const Moments> blocks, Method method) {
  std::vector<double> sums;
  std::vector<double> sums_sq;
  sums.reserve(blocks.size());
  sums_sq.reserve(blocks.size());
  std::uint64_t count = 0;
  for (const auto& b : blocks) {
    sums.push_back(b.sum);
    sums_sq.push_back(b.sum_sq);
    count += b.count;
  }
  MeasureEstimate est;
  est.method = method;
  est.n_samples = count;
  if (count == 0) return est;
  const double n = static_cast<double>(count);
  const double mean = pairwise_sum(sums) / n;
  est.value = mean;
  if (count > 1) {
    const double var = std::max(0.0, (pairwise_sum(sums_sq) / n - mean * mean) * n / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

unsigned effective_workers(std::uint64_t n, std::uint64_t block_size, unsigned workers) {
  const std::uint64_t blocks = block_count(n, block_size);
  if (workers == 0) workers = default_workers();
  return static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(blocks, 1)));
}

unsigned for_each_block_on_workers(
    std::uint64_t n, std::uint64_t block_size, unsigned workers,
    const std::function<void(unsigned, std::uint64_t, std::uint64_t, std::uint64_t)>& fn) {
  const std::uint64_t blocks = block_count(n, block_size);
  workers = effective_workers(n, block_size, workers);

  auto run_block = [&](unsigned w, std::uint64_t b) {
    const std::uint64_t begin = b * block_size;
    fn(w, b, begin, std::min(n, begin + block_size));
  };
  if (workers <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(0, b);
    return workers;
  }

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint64_t b = next++; b < blocks; b = next++) {
        try {
          run_block(w, b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = blocks;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return workers;
}

void for_each_block(std::uint64_t n, std::uint64_t block_size, unsigned workers,
                    const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)>& fn) {
  for_each_block_on_workers(n, block_size, workers,
                            [&](unsigned, std::uint64_t b, std::uint64_t begin, std::uint64_t end) { fn(b, begin, end); });
}

}  // namespace dwell
