#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "dwell/dynamics.hpp"
#include "dwell/errors.hpp"
#include "test_support.hpp"

using namespace dwell;

namespace {

constexpr double kPi = std::numbers::pi;

// Kolmogorov-Smirnov distance between sorted samples and the uniform law on [lo, hi).
double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

BilliardTable two_door_square() {
  std::vector<BoundarySegment> s;
  s.push_back(BoundarySegment::line({0, 0}, {1, 0}));
  s.push_back(BoundarySegment::line({1, 0}, {1, 1}, SegmentRole::Opening));
  s.push_back(BoundarySegment::line({1, 1}, {0, 1}));
  s.push_back(BoundarySegment::line({0, 1}, {0, 0}, SegmentRole::Opening));
  return BilliardTable(std::move(s), "two-door");
}

}  // namespace

TEST_CASE("particle spec stores p_max^2 = 2mE exactly") {
  const auto p = ParticleSpec::make(2.0, 3.0);
  CHECK(p.p_max_sq == 12.0);
  CHECK(p.p_max == std::sqrt(12.0));
  CHECK(p.speed == p.p_max / 2.0);
  CHECK_THROWS_AS(ParticleSpec::make(0.0, 1.0), InvalidParams);
  CHECK_THROWS_AS(ParticleSpec::make(1.0, -1.0), InvalidParams);
}

TEST_CASE("circle: p = 0 is the diameter orbit") {
  const auto table = make_circle(1.0, 0.0);
  const auto particle = ParticleSpec::make(1.0, 0.5);
  for (double q : {0.0, 0.7, 2.0, 5.5}) {
    const auto step = boundary_map({q, 0.0}, table, particle);
    REQUIRE(step.status == HitStatus::Ok);
    CHECK(std::abs(wrapped_difference(table, step.next.q, q + kPi)) < 1e-12);
    CHECK(step.flight_time == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(step.next.p) < 1e-12);
  }
}

TEST_CASE("circle: chord 2 cos(theta) and |p| conserved along the orbit") {
  const auto table = make_circle(1.0, 0.0);
  const auto particle = ParticleSpec::make(1.0, 0.5);
  for (double theta : {0.1, 0.6, 1.2, -0.9}) {
    BoundaryPhasePoint x{1.3, particle.p_max * std::sin(theta)};
    for (int k = 0; k < 200; ++k) {
      const auto step = boundary_map(x, table, particle);
      REQUIRE(step.status == HitStatus::Ok);
      CHECK(step.flight_time == doctest::Approx(2.0 * std::cos(theta)).epsilon(1e-10));
      CHECK(std::abs(step.next.p) == doctest::Approx(std::abs(x.p)).epsilon(1e-12));
      x = step.next;
    }
  }
}

TEST_CASE("unit square: 45 degree shot from the bottom wall") {
  const auto table = make_rectangle(1.0, 1.0, 0.0);
  const auto particle = ParticleSpec::make(1.0, 0.5);
  const auto step = boundary_map({0.5, particle.p_max / std::sqrt(2.0)}, table, particle);
  REQUIRE(step.status == HitStatus::Ok);
  CHECK(step.segment == 1);
  CHECK(step.flight_time == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK(step.next.q == doctest::Approx(1.5).epsilon(1e-12));

  // Flight time is sqrt(2) times the distance to the nearer wall along the diagonal.
  for (double q0 : {0.2, 0.35, 0.8}) {
    const auto s = boundary_map({q0, particle.p_max / std::sqrt(2.0)}, table, particle);
    CHECK(s.flight_time == doctest::Approx(std::sqrt(2.0) * std::min(1.0 - q0, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("boundary_map rejects grazing input") {
  const auto table = make_circle(1.0, 0.0);
  const auto particle = ParticleSpec::make(1.0, 0.5);
  CHECK_THROWS_AS(boundary_map({0.0, particle.p_max}, table, particle), InvalidParams);
}

TEST_CASE("sample_incoming marginals") {
  const auto table = make_circle(1.0, 0.2);
  const auto particle = ParticleSpec::make(1.0, 0.5);
  const int opening = table.openings().front();
  const double q0 = table.offset(opening);
  constexpr int n = 1'000'000;
  std::vector<double> qs(n), ps(n);
  std::vector<std::uint64_t> bins(64, 0);
  for (int i = 0; i < n; ++i) {
    SampleStream rng(11, i);
    const auto x = sample_incoming(rng, table, particle);
    REQUIRE(std::abs(x.p) < particle.p_max);
    qs[i] = x.q;
    ps[i] = x.p;
    const double theta = std::asin(x.p / particle.p_max);
    ++bins[std::min(63, static_cast<int>((theta + kPi / 2) / kPi * 64))];
  }
  const double ks_critical = 1.628 / std::sqrt(static_cast<double>(n));
  CHECK(ks_uniform(qs, q0, q0 + 0.2) < ks_critical);
  CHECK(ks_uniform(ps, -particle.p_max, particle.p_max) < ks_critical);

  double chi2 = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double a = -kPi / 2 + kPi * k / 64, b = a + kPi / 64;
    const double expected = n * (std::sin(b) - std::sin(a)) / 2.0;
    chi2 += (bins[k] - expected) * (bins[k] - expected) / expected;
  }
  const boost::math::chi_squared dist(63);
  CHECK(chi2 < boost::math::quantile(boost::math::complement(dist, 0.01)));
}

TEST_CASE("sample_incoming needs an opening") {
  SampleStream rng(1, 0);
  CHECK_THROWS_AS(sample_incoming(rng, make_circle(1.0, 0.0), ParticleSpec::make(1.0, 0.5)), NoOpening);
}

TEST_CASE("first_return counts the landing iteration") {
  const auto particle = ParticleSpec::make(1.0, 0.5);
  const auto table = make_rectangle(1.0, 1.0, 1.0);
  const int opening = table.openings().front();
  const auto rec = first_return({table.offset(opening) + 0.5, 0.0}, table, particle);
  CHECK_FALSE(rec.censored);
  CHECK(rec.n == 2);
  CHECK(rec.tau == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(table.segment(table.locate(rec.exit.q).index).is_opening());

  const auto doors = two_door_square();
  const auto direct = first_return({3.5, 0.0}, doors, particle);
  CHECK(direct.n == 1);
  CHECK(direct.tau == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(doors.locate(direct.exit.q).index == 1);
}

TEST_CASE("first_return censors at N_max") {
  const auto particle = ParticleSpec::make(1.0, 0.5);
  const auto table = make_circle(1.0, 0.2);
  int checked = 0;
  for (int i = 0; i < 100 && checked < 10; ++i) {
    SampleStream rng(5, i);
    const auto x0 = sample_incoming(rng, table, particle);
    const auto full = first_return(x0, table, particle);
    if (full.corner_discarded || full.n <= 3) continue;
    const auto cut = first_return(x0, table, particle, 3);
    CHECK(cut.censored);
    CHECK(cut.n == 3);
    CHECK(cut.tau < full.tau);
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("return records: tau matches summed flight, |p| bounded, n >= 1") {
  const auto particle = ParticleSpec::make(1.0, 0.5);
  for (const auto& table : testing::builtin_tables()) {
    for (int i = 0; i < 2000; ++i) {
      SampleStream rng(21, i);
      const auto x0 = sample_incoming(rng, table, particle);
      double flight_sum = 0.0;
      bool bounded = true;
      const auto rec = first_return(x0, table, particle, 100000, [&](const BoundaryPhasePoint& x, double t) {
        flight_sum += t;
        bounded = bounded && std::abs(x.p) <= particle.p_max;
      });
      if (rec.corner_discarded || rec.censored) continue;
      CHECK(bounded);
      CHECK(rec.n >= 1);
      CHECK(rec.tau > 0.0);
      CHECK(rec.tau == doctest::Approx(flight_sum).epsilon(1e-12));
      CHECK(rec.tau == doctest::Approx(rec.path_length / particle.speed).epsilon(1e-12));
      CHECK(table.segment(table.locate(rec.exit.q).index).is_opening());
    }
  }
}

TEST_CASE("boundary map preserves dq dp on every built-in table") {
  const auto particle = ParticleSpec::make(1.0, 0.5);
  auto tables = testing::builtin_tables();
  tables.push_back(make_circle(1.0, 0.0));
  for (const auto& table : tables) {
    int usable = 0, good = 0;
    for (int i = 0; i < 1000; ++i) {
      SampleStream rng(31, i);
      const BoundaryPhasePoint x{rng.uniform() * table.perimeter(), rng.uniform(-0.99, 0.99) * particle.p_max};
      const auto j = jacobian_check(x, table, particle, 1e-6);
      if (!j.usable) continue;
      ++usable;
      if (std::abs(j.det - 1.0) < 1e-5) ++good;
    }
    INFO(table.family());
    CHECK(usable > 900);
    CHECK(good >= 0.99 * usable);
  }
}

TEST_CASE("jacobian scales with the particle momentum") {
  const auto table = make_stadium(2.0, 1.0, 0.4);
  const auto particle = ParticleSpec::make(2.0, 4.0);
  const auto j = jacobian_check({1.7, 0.3 * particle.p_max}, table, particle, 1e-6);
  REQUIRE(j.usable);
  CHECK(j.det == doctest::Approx(1.0).epsilon(1e-5));
}

namespace {

void check_reversal(const BilliardTable& table, int steps) {
  const auto particle = ParticleSpec::make(1.0, 0.5);
  int usable = 0, good = 0;
  for (int i = 0; i < 10000; ++i) {
    SampleStream rng(41, i);
    const BoundaryPhasePoint x{rng.uniform() * table.perimeter(), rng.uniform(-0.99, 0.99) * particle.p_max};
    const auto r = time_reversal_check(x, table, particle, steps);
    if (!r.usable) continue;
    ++usable;
    if (r.q_error < 1e-8 * table.perimeter() && r.p_error < 1e-8 * particle.p_max) ++good;
  }
  INFO(table.family() << " k=" << steps);
  CHECK(usable > 9900);
  CHECK(good >= 0.999 * usable);
}

}  // namespace

TEST_CASE("time reversal on integrable tables, 100 steps") {
  check_reversal(make_circle(1.0, 0.0), 100);
  check_reversal(make_rectangle(1.0, 1.0, 0.2), 100);
}

TEST_CASE("time reversal on chaotic tables, 10 steps") {
  check_reversal(make_circle(1.0, 0.2), 10);
  check_reversal(make_stadium(2.0, 1.0, 0.4), 10);
  check_reversal(make_mushroom(1.0, 1.0, 1.0, 1.0), 10);
  check_reversal(make_cosine_channel(6.0, 1.0, 0.8, 0.6), 10);
}
