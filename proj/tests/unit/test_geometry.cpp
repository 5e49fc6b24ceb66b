#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dwell/errors.hpp"
#include "dwell/geometry.hpp"
#include "test_support.hpp"

using namespace dwell;
using dwell::testing::builtin_tables;
using dwell::testing::distance_to_curve;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("next_collision: radius ray in the unit circle") {
  const auto table = make_circle(1.0, 0.0);
  const auto hit = next_collision({0.0, 0.0}, {1.0, 0.0}, table);
  REQUIRE(hit.status != HitStatus::NoIntersection);
  CHECK(hit.event.point.x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(hit.event.point.y == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(hit.event.length == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("next_collision: 45 degree chord from (-1,0)") {
  // Ray (-1,0) + t(c,c), c = 1/sqrt2, meets x^2+y^2=1 at t^2 - sqrt2 t = 0 -> t = sqrt2, point (0,1).
  const auto table = make_circle(1.0, 0.0);
  const double c = std::sqrt(0.5);
  const auto hit = next_collision({-1.0, 0.0}, {c, c}, table);
  REQUIRE(hit.ok());
  CHECK(hit.event.point.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(hit.event.point.x) < 1e-12);
  CHECK(hit.event.point.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hit.event.length == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("next_collision: unit square, straight down") {
  const auto table = make_rectangle(1.0, 1.0, 0.0);
  const auto hit = next_collision({0.5, 0.5}, {0.0, -1.0}, table);
  REQUIRE(hit.ok());
  CHECK(hit.event.point.x == doctest::Approx(0.5));
  CHECK(std::abs(hit.event.point.y) < 1e-15);
  CHECK(hit.event.length == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(hit.event.segment == 0);
  CHECK(hit.event.normal.y == doctest::Approx(1.0));
}

TEST_CASE("next_collision reports corner hits") {
  const auto table = make_rectangle(1.0, 1.0, 0.0);
  const double c = std::sqrt(0.5);
  const auto hit = next_collision({0.5, 0.5}, {c, c}, table);
  CHECK(hit.status == HitStatus::CornerHit);
}

TEST_CASE("reflect: head-on, 45 degrees, grazing") {
  const Vec2 a = reflect({1.0, 0.0}, {-1.0, 0.0});
  CHECK(a.x == -1.0);
  CHECK(a.y == 0.0);
  const double c = std::sqrt(0.5);
  const Vec2 b = reflect({c, -c}, {0.0, 1.0});
  CHECK(b.x == doctest::Approx(c));
  CHECK(b.y == doctest::Approx(c));
  const Vec2 g = reflect({1.0, 0.0}, {0.0, 1.0});
  CHECK(g.x == 1.0);
  CHECK(g.y == 0.0);
}

TEST_CASE("reflect is an involution for a fixed normal") {
  SampleStream rng(7, 0);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(0.0, 2 * kPi);
    const double b = rng.uniform(0.0, 2 * kPi);
    const Vec2 d{std::cos(a), std::sin(a)};
    const Vec2 n{std::cos(b), std::sin(b)};
    const Vec2 r = reflect(reflect(d, n), n);
    REQUIRE(norm(r - d) < 1e-12);
    REQUIRE(std::abs(norm(reflect(d, n)) - 1.0) < 1e-12);
  }
}

TEST_CASE("birkhoff_coords: normal incidence, grazing, and 30 degrees on the circle") {
  const auto table = make_circle(1.0, 0.0);
  const auto hit = next_collision({0.0, 0.0}, {0.0, 1.0}, table);
  REQUIRE(hit.ok());
  const CollisionEvent& ev = hit.event;
  CHECK(ev.q == doctest::Approx(kPi / 2));
  CHECK(birkhoff_coords(ev, ev.normal, 1.0).p == doctest::Approx(0.0));
  CHECK(birkhoff_coords(ev, ev.tangent, 2.0).p == doctest::Approx(2.0));
  // 30 degrees off the inward normal, tilted toward increasing q.
  const Vec2 out = ev.normal * std::cos(kPi / 6) + ev.tangent * std::sin(kPi / 6);
  CHECK(birkhoff_coords(ev, out, 1.0).p == doctest::Approx(0.5).epsilon(1e-14));
  // Counterclockwise traversal: the tangent at the top of the circle points to -x.
  CHECK(ev.tangent.x == doctest::Approx(-1.0));
}

TEST_CASE("table builders: perimeter and area of the circle with a chord") {
  const auto t = make_circle(1.0, 0.2);
  const double alpha = std::asin(0.1);
  CHECK(t.perimeter() == doctest::Approx(2 * kPi - 2 * alpha + 0.2).epsilon(1e-13));
  CHECK(t.perimeter() == doctest::Approx(6.28285).epsilon(1e-6));
  const double segment_area = 0.5 * (2 * alpha - std::sin(2 * alpha));
  CHECK(t.area() == doctest::Approx(kPi - segment_area).epsilon(1e-13));
  CHECK(t.area() == doctest::Approx(3.140923).epsilon(1e-6));
  CHECK(t.opening_width() == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("table builders: rectangle and stadium closed forms") {
  const auto r = make_rectangle(1.0, 1.0, 0.2);
  CHECK(r.perimeter() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.area() == doctest::Approx(1.0).epsilon(1e-14));
  const auto s = make_stadium(2.0, 1.0, 0.4);
  CHECK(s.area() == doctest::Approx(kPi + 4.0).epsilon(1e-13));
  CHECK(s.perimeter() == doctest::Approx(2 * kPi + 4.0).epsilon(1e-13));
  CHECK(s.openings().size() == 1);
}

TEST_CASE("closed forms hold to 1e-12 relative across sizes") {
  for (double R : {0.3, 1.0, 7.5}) {
    const auto c = make_circle(R, 0.0);
    CHECK(std::abs(c.area() / (kPi * R * R) - 1.0) < 1e-12);
    CHECK(std::abs(c.perimeter() / (2 * kPi * R) - 1.0) < 1e-12);
    const auto r = make_rectangle(R, 2 * R, R);
    CHECK(std::abs(r.area() / (2 * R * R) - 1.0) < 1e-12);
    CHECK(std::abs(r.perimeter() / (6 * R) - 1.0) < 1e-12);
  }
}

TEST_CASE("mushroom and cosine channel geometry") {
  const auto m = make_mushroom(1.0, 1.0, 1.0, 0.6);
  CHECK(m.area() == doctest::Approx(kPi / 2 + 1.0).epsilon(1e-13));
  CHECK(m.perimeter() == doctest::Approx(kPi + 1.0 + 1.0 + 2.0).epsilon(1e-13));
  CHECK(m.opening_width() == doctest::Approx(0.6));

  const auto c = make_cosine_channel(6.0, 1.0, 0.8, 0.6);
  CHECK(c.area() == doctest::Approx(6.0 * 1.0 + 0.8 * 6.0 / 2).epsilon(1e-13));
  // Independent arc length of the cosine wall by composite Simpson.
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = 6.0 * i / n;
    const double s = 0.5 * 0.8 * (2 * kPi / 6.0) * std::sin(2 * kPi * x / 6.0);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::sqrt(1 + s * s);
  }
  const double wall = sum * (6.0 / n) / 3.0;
  CHECK(c.perimeter() == doctest::Approx(6.0 + 1.0 + 1.0 + wall).epsilon(1e-11));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(make_circle(-1.0, 0.1), InvalidParams);
  CHECK_THROWS_AS(make_circle(1.0, 2.5), InvalidParams);
  CHECK_THROWS_AS(make_rectangle(1.0, 1.0, 1.5), InvalidParams);
  CHECK_THROWS_AS(make_stadium(0.0, 1.0, 0.0), InvalidParams);
  CHECK_THROWS_AS(make_mushroom(1.0, 2.5, 1.0, 0.5), InvalidParams);
  CHECK_THROWS_AS(make_mushroom(1.0, 1.0, 1.0, 1.2), InvalidParams);
  CHECK_THROWS_AS(make_cosine_channel(6.0, 1.0, 0.5, 2.0), InvalidParams);
  CHECK_THROWS_AS(build_table({"hexagon", {}}), InvalidParams);
  CHECK_THROWS_AS(build_table({"circle", {{"radius", 1.0}, {"colour", 2.0}}}), InvalidParams);
  CHECK_THROWS_AS(build_table({"circle", {}}), InvalidParams);
}

TEST_CASE("open chains, clockwise chains and curved openings are rejected") {
  std::vector<BoundarySegment> open{BoundarySegment::line({0, 0}, {1, 0}), BoundarySegment::line({1, 0}, {1, 1})};
  CHECK_THROWS_AS(BilliardTable{open}, InvalidParams);
  std::vector<BoundarySegment> cw{BoundarySegment::line({0, 0}, {0, 1}), BoundarySegment::line({0, 1}, {1, 1}),
                                  BoundarySegment::line({1, 1}, {1, 0}), BoundarySegment::line({1, 0}, {0, 0})};
  CHECK_THROWS_AS(BilliardTable{cw}, InvalidParams);
  // Bow tie: closed but self-intersecting.
  std::vector<BoundarySegment> bow{BoundarySegment::line({0, 0}, {1, 1}), BoundarySegment::line({1, 1}, {1, 0}),
                                   BoundarySegment::line({1, 0}, {0, 1}), BoundarySegment::line({0, 1}, {0, 0})};
  CHECK_THROWS_AS(BilliardTable{bow}, InvalidParams);
}

TEST_CASE("build_table maps names to families") {
  const auto t = build_table({"stadium", {{"straight", 2.0}, {"radius", 1.0}, {"opening_width", 0.4}}});
  CHECK(t.family() == "stadium");
  CHECK(t.area() == doctest::Approx(kPi + 4.0));
}

TEST_CASE("random interior rays land on the boundary") {
  SampleStream rng(11, 3);
  for (const auto& table : builtin_tables()) {
    CAPTURE(table.family());
    int corners = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto ray = dwell::testing::random_interior_ray(rng, table);
      const auto hit = next_collision(ray.origin, ray.direction, table);
      REQUIRE(hit.status != HitStatus::NoIntersection);
      if (hit.status == HitStatus::CornerHit) {
        ++corners;
        continue;
      }
      REQUIRE(hit.event.length > 0.0);
      REQUIRE(distance_to_curve(table.segment(hit.event.segment), hit.event.point) < 1e-9);
      REQUIRE(norm(table.point_at(hit.event.q) - hit.event.point) < 1e-9);
    }
    CHECK(corners < 5);
  }
}

TEST_CASE("birkhoff coordinates round-trip through the outgoing ray") {
  SampleStream rng(5, 1);
  for (const auto& table : builtin_tables()) {
    CAPTURE(table.family());
    for (int i = 0; i < 5000; ++i) {
      const BoundaryPhasePoint x{rng.uniform() * table.perimeter(), rng.uniform(-2.0, 2.0)};
      const auto ray = ray_from_birkhoff(table, x, 2.0);
      CollisionEvent ev;
      ev.q = table.wrap(table.offset(ray.segment) + table.segment(ray.segment).arc_length_of(ray.point));
      ev.tangent = table.tangent_at(ev.q);
      const auto back = birkhoff_coords(ev, ray.direction, 2.0);
      REQUIRE(std::abs(back.q - x.q) < 1e-9);
      REQUIRE(std::abs(back.p - x.p) < 1e-9);
      // Outgoing rays point into the table.
      REQUIRE(dot(ray.direction, left_perp(ev.tangent)) >= 0.0);
    }
  }
}

TEST_CASE("cosine wall intersection agrees with a dense scan") {
  const CosineShape wall{6.0, 1.0, 0.8};
  SampleStream rng(9, 0);
  int found = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 o{rng.uniform(0.1, 5.9), rng.uniform(0.05, 0.95)};
    const double a = rng.uniform(0.05, kPi - 0.05);
    const Vec2 d{std::cos(a), std::sin(a)};
    const double t = cosine_intersection(wall, o, d, 1e-12, 1e9);
    // Oracle: first sign change of y - h(x) on a fine grid, refined by bisection.
    double oracle = std::numeric_limits<double>::infinity();
    const double dt = 1e-4;
    for (double s = dt; s < 20.0; s += dt) {
      const Vec2 p = o + d * s;
      if (p.x < 0.0 || p.x > 6.0) break;
      if (p.y - wall.height(p.x) > 0.0) {
        double lo = s - dt, hi = s;
        for (int k = 0; k < 80; ++k) {
          const double mid = 0.5 * (lo + hi);
          const Vec2 m = o + d * mid;
          (m.y - wall.height(m.x) > 0.0 ? hi : lo) = mid;
        }
        oracle = 0.5 * (lo + hi);
        break;
      }
    }
    if (std::isfinite(oracle)) {
      ++found;
      REQUIRE(t == doctest::Approx(oracle).epsilon(1e-10));
    } else {
      REQUIRE(!std::isfinite(t));
    }
  }
  CHECK(found > 1000);
}
