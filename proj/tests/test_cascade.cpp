#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "oscincl/cascade.hpp"
#include "oscincl/errors.hpp"

using namespace oscincl;

namespace {

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

CascadeConfig small_origin() {
  CascadeConfig c;
  c.target_count = 2;
  c.resolution = 512;
  return c;
}

}  // namespace

TEST_CASE("effective model: origin p > 1 adds lambda G and the auto shift") {
  const auto F = builtin("F0");
  const auto G = builtin("G0", 2.0);
  const auto m = build_effective_model(F, G, 2.0, 0.3, Regime::Origin);
  CHECK(m.case_id == "origin_p_gt_1");
  CHECK_FALSE(m.threshold_mode);
  CHECK(m.l.divergent);
  CHECK(m.shift == 1.0);  // l is -inf, so the fallback shift
  CHECK(m.k == 1.0);
  for (double s : {0.01, 0.1, 0.3}) {
    CHECK(m.A.value(s) == doctest::Approx(F.value(s) + 0.3 * G.value(s) + 0.5 * s * s).epsilon(1e-14));
  }
}

TEST_CASE("effective model: origin p = 1 with lambda 0 is F plus the shift quadratic") {
  const auto F = builtin("F0");
  const auto m = build_effective_model(F, zero_model(), 1.0, 0.0, Regime::Origin);
  CHECK(m.case_id == "origin_p1");
  CHECK(m.k == 1.0);
  CHECK(m.A.value(0.2) == doctest::Approx(F.value(0.2) + 0.5 * 0.04));
  const auto fixed = build_effective_model(F, zero_model(), 1.0, 0.0, Regime::Origin, 3.0);
  CHECK(fixed.k == 3.0);
}

TEST_CASE("effective model: finite l gives the midpoint shift and the hypothesis check") {
  // F = -s², G = s²: l = -2 and c_bar = 2.
  const auto F = add_quadratic(zero_model(), -2.0);
  const auto G = add_quadratic(zero_model(), 2.0);
  const auto m = build_effective_model(F, G, 1.0, 0.5, Regime::Origin);
  CHECK_FALSE(m.l.divergent);
  CHECK(m.l.value == doctest::Approx(-2.0));
  CHECK(m.c_bar == doctest::Approx(2.0));
  CHECK(m.shift == doctest::Approx(1.5));
  CHECK(m.k == doctest::Approx(0.5));
  // λc̄ = 2 = -l violates the strict inequality at the origin
  const std::string msg = what_of([&] { build_effective_model(F, G, 1.0, 1.0, Regime::Origin); });
  CHECK(msg.find("requires lambda c_bar < -l0") != std::string::npos);
  CHECK_THROWS_AS(build_effective_model(F, G, 1.0, 1.0, Regime::Origin), PreconditionError);
  // a shift outside (λc̄, -l) is rejected
  CHECK_THROWS_AS(build_effective_model(F, G, 1.0, 0.5, Regime::Origin, 2.5), PreconditionError);
}

TEST_CASE("effective model: case ids and threshold mode") {
  const auto F0 = builtin("F0");
  const auto Fi = builtin("Finf");
  CHECK(build_effective_model(F0, builtin("G0", 0.5), 0.5, 0.0, Regime::Origin).case_id == "origin_p_lt_1");
  CHECK(build_effective_model(F0, builtin("G0", 0.5), 0.5, 0.0, Regime::Origin).threshold_mode);
  const auto inf = build_effective_model(Fi, builtin("Ginf", 2.0), 2.0, 0.0, Regime::Infinity);
  CHECK(inf.case_id == "infinity_p_gt_1");
  CHECK(inf.threshold_mode);
  CHECK(inf.k > 0.0);
  CHECK(build_effective_model(Fi, zero_model(), 1.0, 0.0, Regime::Infinity).case_id == "infinity_p1");
  CHECK(what_of([&] { build_effective_model(F0, zero_model(), -1.0, 0.0, Regime::Origin); }) == "p > 0 required");
}

TEST_CASE("config validation") {
  CascadeConfig c;
  c.p = -1.0;
  CHECK(what_of([&] { validate_cascade_config(c); }) == "p > 0 required");
  c = CascadeConfig{};
  c.lambda = -0.1;
  CHECK_THROWS_AS(validate_cascade_config(c), PreconditionError);
  c = CascadeConfig{};
  c.bump_radius = 0.9;
  CHECK_THROWS_AS(validate_cascade_config(c), PreconditionError);
  c = CascadeConfig{};
  c.lambda_fraction = 0.5;
  CHECK(what_of([&] { run_cascade(c); }).find("lambda_fraction applies to") != std::string::npos);
  CHECK_THROWS_AS(compute_thresholds(CascadeConfig{}), PreconditionError);
}

TEST_CASE("target 0 gives an empty family that passes") {
  CascadeConfig c = small_origin();
  c.target_count = 0;
  const SolutionFamily f = run_cascade(c);
  CHECK(f.records.empty());
  CHECK(f.verification.verdict);
  CHECK(f.verification.failures.empty());
}

TEST_CASE("origin cascade on a coarse mesh") {
  const CascadeConfig c = small_origin();
  const SolutionFamily f = run_cascade(c);
  REQUIRE(f.records.size() == 2);
  REQUIRE(f.levels.size() == 2);
  CHECK(f.model.case_id == "origin_p1");
  CHECK(f.verification.verdict);
  CHECK(f.verification.distinct);
  CHECK(f.records[1].linf < f.records[0].linf);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(f.records[i].energy < 0.0);
    CHECK(f.records[i].residual <= c.minimize.stop_tol);
    CHECK(f.records[i].u.maxCoeff() <= f.levels[i].interval.delta * (1.0 + 1e-8));
  }
  const auto& e = f.verification.common_level_energies;
  REQUIRE(e.size() == 2);
  CHECK(e[0] < e[1]);
  CHECK(e[1] < 0.0);

  SUBCASE("an injected duplicate fails distinctness") {
    SolutionFamily g = f;
    g.records.push_back(g.records[0]);
    g.levels.push_back(g.levels[0]);
    const VerificationReport r = verify_theorem_predictions(g, c);
    CHECK_FALSE(r.distinct);
    CHECK_FALSE(r.verdict);
  }
  SUBCASE("a single record passes monotonicity vacuously") {
    SolutionFamily g = f;
    g.records.resize(1);
    g.levels.resize(1);
    CascadeConfig one = c;
    one.target_count = 1;
    const VerificationReport r = verify_theorem_predictions(g, one);
    CHECK(r.linf_monotone);
    CHECK(r.h01_monotone);
    CHECK(r.verdict);
  }
  SUBCASE("a missing record fails the target") {
    SolutionFamily g = f;
    g.records.resize(1);
    g.levels.resize(1);
    const VerificationReport r = verify_theorem_predictions(g, c);
    CHECK_FALSE(r.target_met);
    CHECK_FALSE(r.verdict);
  }
}

TEST_CASE("infinity cascade grows in sup norm") {
  CascadeConfig c;
  c.F = builtin("Finf");
  c.regime = Regime::Infinity;
  c.target_count = 2;
  c.domain_hi = {20.0, 1.0};
  c.rel_margin = 1e-5;
  const SolutionFamily f = run_cascade(c);
  REQUIRE(f.records.size() == 2);
  CHECK(f.verification.verdict);
  CHECK(f.records[1].linf > f.records[0].linf);
  CHECK(f.records[1].energy <= f.records[0].energy);
  // first sup norm sits inside the first stability interval of Finf + k s²/2
  CHECK(f.records[0].linf <= f.levels[0].interval.delta * (1.0 + 1e-8));
}
