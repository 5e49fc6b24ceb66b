#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dwell/errors.hpp"
#include "dwell/expr.hpp"

using namespace dwell;

namespace {

double eval(const char* text, double x = 0.0, double y = 0.0) { return Expression::parse(text)(x, y); }

}  // namespace

TEST_CASE("arithmetic precedence and associativity") {
  CHECK(eval("1 + 2 * 3") == 7.0);
  CHECK(eval("(1 + 2) * 3") == 9.0);
  CHECK(eval("8 - 3 - 2") == 3.0);
  CHECK(eval("12 / 3 / 2") == 2.0);
  CHECK(eval("2 ^ 3 ^ 2") == 512.0);
  CHECK(eval("-2 ^ 2") == -4.0);
  CHECK(eval("2 ^ -1") == 0.5);
  CHECK(eval("--3") == 3.0);
}

TEST_CASE("variables, constants and functions") {
  CHECK(eval("x * y", 3.0, 4.0) == 12.0);
  CHECK(eval("0.5*(x^2 + y^2)", 1.0, 2.0) == 2.5);
  CHECK(eval("pi") == std::numbers::pi);
  CHECK(eval("exp(1)") == doctest::Approx(std::numbers::e));
  CHECK(eval("sin(pi/2) + cos(0)") == doctest::Approx(2.0));
  CHECK(eval("sqrt(x)", 2.0) == std::sqrt(2.0));
  CHECK(eval("1.5e-3 * 2E2") == doctest::Approx(0.3));
  CHECK(eval(".25") == 0.25);
}

TEST_CASE("unicode multiplication and division signs") {
  CHECK(eval("3 × 4 ÷ 6") == 2.0);
  CHECK(eval("x×x", 5.0) == 25.0);
}

TEST_CASE("matches hand-written potential") {
  const auto v = Expression::parse("0.5*(1 - 0.5*exp(-(x-4)^2/4))*y^2");
  for (double x : {0.0, 2.5, 4.0, 7.0}) {
    for (double y : {-1.0, 0.3, 1.2}) {
      const double expected = 0.5 * (1.0 - 0.5 * std::exp(-(x - 4.0) * (x - 4.0) / 4.0)) * y * y;
      CHECK(v(x, y) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
}

TEST_CASE("syntax errors report position") {
  CHECK_THROWS_AS(Expression::parse(""), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("1 +"), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("(x"), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("x y"), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("tan(x)"), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("exp x"), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("1..2"), InvalidParams);
  CHECK_THROWS_AS(Expression::parse("2 $ 3"), InvalidParams);
  try {
    Expression::parse("x + z");
    FAIL("expected a parse error");
  } catch (const InvalidParams& e) {
    CHECK(std::string(e.what()).find("position 4") != std::string::npos);
  }
}
