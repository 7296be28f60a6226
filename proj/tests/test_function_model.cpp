#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oscincl/errors.hpp"
#include "oscincl/function_model.hpp"
#include "oscincl/primitive.hpp"

using namespace oscincl;

namespace {

struct Frozen {
  double s;
  double value;
};

// 30-digit mpmath quadrature, see tests/oracles/primitive_oracle.py.
constexpr Frozen kF0[] = {
    {0.0001, 3.3323811016448027041e-7},   {0.001, 1.0558774735721474271e-5},
    {0.01, 0.0003418226026132628275},     {0.02, 0.00099646906744131394693},
    {0.05, 0.0040116691502815173997},     {0.1, 0.007700857229245383459},
    {0.25, 0.017822499977947328472},      {0.3, 0.018600253504494257028},
    {1.0, 0.77101368587113323085},        {2.5, 2.8368208293193455848},
};
constexpr Frozen kFinf[] = {
    {0.5, 0.18693908756822715827}, {1.0, 0.69755526536546569741},
    {3.7, 4.5230741760556352713},  {10.0, 13.741955785029382576},
    {25.5, 38.870252576166873486}, {60.0, 162.90419057410226865},
};

double f0(double t) { return std::sqrt(t) * (0.5 + std::sin(1.0 / t)); }

}  // namespace

TEST_CASE("primitive values match the quadrature oracle") {
  const auto F0 = builtin("F0");
  for (const auto& [s, v] : kF0) {
    CAPTURE(s);
    CHECK(std::abs(eval(F0, s) - v) <= 1e-10 * std::max(1.0, std::abs(v)));
    CHECK(std::abs(eval(F0, s) - v) <= 1e-12 * std::abs(v) + 1e-15);
  }
  const auto Finf = builtin("Finf");
  for (const auto& [s, v] : kFinf) {
    CAPTURE(s);
    CHECK(std::abs(eval(Finf, s) - v) <= 1e-12 * std::abs(v));
  }
}

TEST_CASE("primitive is continuous across its evaluation regimes") {
  const auto F0 = builtin("F0");
  const double cut = F0Primitive::kSeriesCut;
  CHECK(std::abs(eval(F0, std::nextafter(cut, 1.0)) - eval(F0, cut)) < 1e-15);
  const auto Finf = builtin("Finf");
  for (double cut2 : {FinfPrimitive::kPowerSeriesCut, FinfPrimitive::kAsymptoticCut}) {
    const double below = eval(Finf, cut2);
    const double above = eval(Finf, std::nextafter(cut2, 100.0));
    CHECK(std::abs(above - below) < 1e-12 * std::max(1.0, std::abs(below)));
  }
}

TEST_CASE("zero extension") {
  for (const char* name : {"F0", "G0", "Finf", "Ginf"}) {
    const auto m = builtin(name, 2.0);
    CHECK(eval(m, 0.0) == 0.0);
    CHECK(eval(m, -1.0) == 0.0);
    CHECK(grad_interval(m, -0.5) == GradInterval{});
    CHECK(grad_interval(m, 0.0).contains(0.0));
  }
}

TEST_CASE("gradients at smooth points are the integrands") {
  const auto F0 = builtin("F0");
  const auto Finf = builtin("Finf");
  for (double t : {0.013, 0.21, 0.7, 3.3}) {
    const auto g = grad_interval(F0, t);
    CHECK(g.degenerate());
    CHECK(g.lo == doctest::Approx(f0(t)).epsilon(1e-12));
    const auto gi = grad_interval(Finf, t);
    CHECK(gi.lo == doctest::Approx(std::sqrt(t) * (0.5 + std::sin(t))).epsilon(1e-12));
  }
}

TEST_CASE("G0 kink: hull of zero and the active one-sided derivative") {
  const auto G = g0_model(2.0);
  for (int j : {0, 1, 4}) {
    const double s = 1.0 / (std::numbers::pi / 2.0 + j * std::numbers::pi);
    const double h = 1e-7;
    const double right = (eval(G, s + h) - eval(G, s)) / h;
    const double left = (eval(G, s) - eval(G, s - h)) / h;
    const double active = std::abs(right) > std::abs(left) ? right : left;
    const auto g = grad_interval(G, s);
    CAPTURE(j);
    CHECK(g.contains(0.0));
    CHECK(g.width() == doctest::Approx(std::abs(active)).epsilon(1e-4));
    CHECK((active < 0 ? g.lo : g.hi) == doctest::Approx(active).epsilon(1e-4));
  }
}

TEST_CASE("Ginf at pi") {
  const auto G = ginf_model(2.0);
  CHECK(std::abs(eval(G, std::numbers::pi)) < 1e-14);
  const auto g = grad_interval(G, std::numbers::pi);
  CHECK(g.lo == doctest::Approx(-std::numbers::pi * std::numbers::pi));
  CHECK(g.hi == 0.0);
  const double h = 1e-7;
  const double left = (eval(G, std::numbers::pi) - eval(G, std::numbers::pi - h)) / h;
  CHECK(g.lo == doctest::Approx(left).epsilon(1e-5));
}

TEST_CASE("combinators") {
  const auto F0 = builtin("F0");
  const auto G = g0_model(2.0);
  const auto z = zero_model();
  for (double t : {-0.3, 0.0, 0.05, 0.4, 2.0}) {
    CHECK(eval(sum(F0, z), t) == eval(F0, t));
    CHECK(eval(add_quadratic(F0, 0.0), t) == eval(F0, t));
  }
  const double t = 0.37;
  CHECK(grad_interval(sum(F0, G), t) == grad_interval(F0, t) + grad_interval(G, t));
  CHECK(grad_interval(add_quadratic(F0, 1.0), t) == grad_interval(F0, t) + t);
  CHECK(grad_interval(scale(-2.0, G), t) == -2.0 * grad_interval(G, t));
  CHECK(eval(add_quadratic(z, 3.0), 2.0) == 6.0);
  CHECK(eval(add_quadratic(z, 3.0), -2.0) == 0.0);

  const double fd = (eval(sum(F0, G), t + 1e-6) - eval(sum(F0, G), t - 1e-6)) / 2e-6;
  CHECK(grad_interval(sum(F0, G), t).lo == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("truncation chain rule") {
  const auto A = FunctionModel::from_functions(
      "stub", [](double s) { return -1.5 * s; }, [](double s) {
        return s == 1.0 ? GradInterval{-2.0, -1.0} : GradInterval::point(-1.5);
      });
  const auto T = truncate(A, 1.0);
  CHECK(grad_interval(T, 1.0) == GradInterval{-2.0, 0.0});
  CHECK(grad_interval(T, 0.5) == grad_interval(A, 0.5));
  CHECK(grad_interval(T, 1.5) == GradInterval{});
  CHECK(eval(T, 3.0) == eval(A, 1.0));
  CHECK_THROWS_AS(truncate(A, 0.0), PreconditionError);

  const auto F0 = builtin("F0");
  for (double s : {0.05, 0.2, 0.3, 0.9}) {
    CHECK(eval(truncate(truncate(F0, 0.25), 0.1), s) == eval(truncate(F0, 0.1), s));
    CHECK(eval(truncate(truncate(F0, 0.1), 0.25), s) == eval(truncate(F0, 0.1), s));
  }
}

TEST_CASE("lebourg check") {
  const auto F0 = builtin("F0");
  CHECK(lebourg_check(F0, 0.1, 0.2, 1000));
  CHECK(lebourg_check(linear_model(2.5), -1.0, 3.0, 2));
  CHECK(lebourg_check(linear_model(-0.7), 0.5, 0.6, 17));
  const auto corrupted = FunctionModel::from_functions(
      "corrupted", [F0](double s) { return eval(F0, s); },
      [F0](double s) { return grad_interval(F0, s) + 1.0; });
  CHECK_FALSE(lebourg_check(corrupted, 0.1, 0.2, 1000));
  CHECK_THROWS_AS(lebourg_check(F0, 0.1, 0.2, 1), PreconditionError);
  CHECK_THROWS_AS(lebourg_check(F0, 0.2, 0.1, 10), PreconditionError);
}

TEST_CASE("lebourg check on random windows") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  for (const auto& m : {builtin("F0"), builtin("G0", 2.0), builtin("Finf"), builtin("Ginf", 2.0)}) {
    int failures = 0;
    for (int k = 0; k < 200; ++k) {
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-6) continue;
      failures += lebourg_check(m, a, b, 400) ? 0 : 1;
    }
    CAPTURE(m.describe());
    CHECK(failures == 0);
  }
}

TEST_CASE("grad bounds dominate sampled gradients") {
  for (const auto& m : {builtin("F0"), builtin("G0", 2.0), builtin("G0", 0.5), builtin("Finf"),
                        builtin("Ginf", 2.0), builtin("Ginf", 0.5)}) {
    const double hi = 4.0;
    const double bound = *m.grad_bound(0.0, hi);
    for (int j = 1; j <= 4000; ++j) {
      const auto g = m.grad(hi * j / 4000.0);
      CAPTURE(m.describe());
      CHECK(std::max(std::abs(g.lo), std::abs(g.hi)) <= bound);
    }
  }
}

TEST_CASE("builtin lookup") {
  CHECK_THROWS_AS(builtin("F7"), ConfigError);
  CHECK_THROWS_AS(builtin("G0", -1.0), PreconditionError);
  CHECK(builtin("Ginf", 2.0).describe() == "Ginf(2)");
}

TEST_CASE("breakpoints are analytic") {
  const auto bp = g0_model(2.0).breakpoints(0.05, 1.0);
  REQUIRE(!bp.empty());
  for (double s : bp) CHECK(std::abs(std::cos(1.0 / s)) < 1e-12);
  const auto bi = ginf_model(1.0).breakpoints(1.0, 10.0);
  CHECK(bi.size() == 3);
}
