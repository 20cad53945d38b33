#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "lvfa/expr.hpp"

using lvfa::BoundEstimate;
using lvfa::TimeFn;

TEST_SUITE_BEGIN("expr");

TEST_CASE("literals, t, and arithmetic evaluate exactly") {
  CHECK(TimeFn::parse("1.5").eval(0.0) == 1.5);
  CHECK(TimeFn::parse("t").eval(3.25) == 3.25);
  CHECK(TimeFn::parse("2+3*4").eval(0.0) == 14.0);
  CHECK(TimeFn::parse("(2+3)*4").eval(0.0) == 20.0);
  CHECK(TimeFn::parse("10-4-3").eval(0.0) == 3.0);   // left associative
  CHECK(TimeFn::parse("16/4/2").eval(0.0) == 2.0);   // left associative
  CHECK(TimeFn::parse("-t").eval(2.0) == -2.0);
  CHECK(TimeFn::parse("0-1").eval(5.0) == -1.0);
}

TEST_CASE("2+sin(t) at t=0 is 2") {
  CHECK(TimeFn::parse("2+sin(t)").eval(0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(TimeFn::parse("2+sin(t)").eval(M_PI / 2) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("integer powers, including negative bases") {
  CHECK(TimeFn::parse("t^2").eval(-2.0) == 4.0);
  CHECK(TimeFn::parse("t^3").eval(-2.0) == -8.0);
  CHECK(TimeFn::parse("t^(-1)").eval(4.0) == 0.25);
  CHECK(TimeFn::parse("t^-1").eval(4.0) == 0.25);
  CHECK(TimeFn::parse("-t^2").eval(2.0) == -4.0);  // '^' binds tighter than unary '-'
}

TEST_CASE("functions") {
  CHECK(TimeFn::parse("cos(0)").eval(0.0) == 1.0);
  CHECK(TimeFn::parse("exp(1)").eval(0.0) == doctest::Approx(std::exp(1.0)));
  CHECK(TimeFn::parse("tanh(100)").eval(0.0) == doctest::Approx(1.0));
  CHECK(TimeFn::parse("abs(0-3)").eval(0.0) == 3.0);
  CHECK(TimeFn::parse("min(2, t)").eval(5.0) == 2.0);
  CHECK(TimeFn::parse("max(2, t)").eval(5.0) == 5.0);
}

TEST_CASE("whitespace is insignificant") {
  CHECK(TimeFn::parse("  2 + 3 * t ").eval(2.0) == 8.0);
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS(TimeFn::parse("2+*t"), lvfa::ParseError);
  try {
    TimeFn::parse("2+*t");
  } catch (const lvfa::ParseError& e) {
    CHECK(e.offset == 2);
  }
  CHECK_THROWS_AS(TimeFn::parse(""), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("sin()"), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("foo(t)"), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("(1+2"), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("1 2"), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("min(1)"), lvfa::ParseError);
}

TEST_CASE("non-integer exponents are rejected") {
  CHECK_THROWS_AS(TimeFn::parse("t^0.5"), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("t^t"), lvfa::ParseError);
  CHECK_THROWS_AS(TimeFn::parse("t^(1/3)"), lvfa::ParseError);
}

TEST_CASE("division by zero raises an evaluation error, not NaN") {
  const TimeFn f = TimeFn::parse("1/t");
  CHECK(f.eval(2.0) == 0.5);
  CHECK_THROWS_AS(f.eval(0.0), lvfa::EvalError);
  CHECK_THROWS_AS(TimeFn::parse("t^-1").eval(0.0), lvfa::EvalError);
}

TEST_CASE("sampled bounds of 2+sin(t) over [-100,100]") {
  const TimeFn f = TimeFn::parse("2+sin(t)");
  const auto be = lvfa::estimate_bounds(f, -100.0, 100.0, 100001);
  CHECK(be.source == BoundEstimate::Source::Sampled);
  CHECK(be.inf == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(be.sup == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("declared bounds are returned verbatim after validation") {
  TimeFn f = TimeFn::parse("2+sin(t)");
  f.declared_inf = 1.0;
  f.declared_sup = 3.0;
  const auto be = lvfa::estimate_bounds(f, -100.0, 100.0, 10001);
  CHECK(be.source == BoundEstimate::Source::Declared);
  CHECK(be.inf == 1.0);
  CHECK(be.sup == 3.0);
}

TEST_CASE("contradictory declared bounds raise BoundsError with the witness time") {
  TimeFn f = TimeFn::parse("2+sin(t)");
  f.declared_inf = 1.5;  // actual infimum is 1
  f.declared_sup = 3.0;
  CHECK_THROWS_AS(lvfa::estimate_bounds(f, -100.0, 100.0, 10001), lvfa::BoundsError);
}

TEST_CASE("bounds require at least two samples") {
  CHECK_THROWS_AS(lvfa::estimate_bounds(TimeFn::parse("t"), 0.0, 1.0, 1), lvfa::ArgError);
}

TEST_CASE("print/parse round trip preserves structure") {
  const std::vector<std::string> corpus = {
      "1.5",
      "t",
      "2+3*t",
      "(2+t)*4",
      "10-4-3",
      "16/t/2",
      "-t",
      "-(t+1)",
      "t^2",
      "t^-3",
      "-t^2",
      "2+sin(t)",
      "cos(2*t)+exp(-t)",
      "tanh(t/10)",
      "abs(t-3)",
      "min(2, t)*max(t, -1)",
      "3+0.5*sin(t)",
      "(t+1)^4/(2+cos(t))",
  };
  for (const auto& src : corpus) {
    CAPTURE(src);
    const TimeFn f = TimeFn::parse(src);
    const std::string printed = f.to_string();
    CAPTURE(printed);
    const TimeFn g = TimeFn::parse(printed);
    CHECK(f.same_structure(g));
    for (double t : {-2.0, 0.7, 3.0}) {
      CHECK(f.eval(t) == doctest::Approx(g.eval(t)).epsilon(1e-15));
    }
  }
}

TEST_CASE("sampled bounds can only widen under nested grid refinement") {
  const TimeFn f = TimeFn::parse("sin(3*t)+0.1*t");
  double prev_inf = std::numeric_limits<double>::infinity();
  double prev_sup = -std::numeric_limits<double>::infinity();
  // 2k-1 uniform samples contain the k-sample grid, so extrema are monotone.
  for (int samples = 11; samples < 5000; samples = 2 * samples - 1) {
    const auto be = lvfa::estimate_bounds(f, -10.0, 10.0, samples);
    CHECK(be.inf <= prev_inf + 1e-15);
    CHECK(be.sup >= prev_sup - 1e-15);
    prev_inf = be.inf;
    prev_sup = be.sup;
  }
}

TEST_CASE("constant folding marks pure-constant expressions") {
  CHECK(TimeFn::parse("2+3*4").is_constant());
  CHECK(TimeFn::parse("sin(1)+cos(2)").is_constant());
  CHECK_FALSE(TimeFn::parse("2+sin(t)").is_constant());
}

TEST_SUITE_END();
