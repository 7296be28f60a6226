#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oscincl/cli_io.hpp"
#include "oscincl/errors.hpp"

using namespace oscincl;
namespace fs = std::filesystem;

namespace {

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oscincl_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  const RunConfig rc = parse_config("{}");
  CHECK_FALSE(rc.subcommand.has_value());
  CHECK(rc.cascade.target_count == 4);
  CHECK(rc.cascade.p == 1.0);
  CHECK(rc.cascade.resolution == 2048);
  CHECK(rc.cascade.regime == Regime::Origin);
  CHECK(rc.calculus.models.size() == 4);
  CHECK_FALSE(rc.has_solve);
}

TEST_CASE("full origin config") {
  const RunConfig rc = parse_config(R"({
    "subcommand": "cascade",
    "model": {"F": "F0", "G": "G0", "p": 2, "lambda": 0.5, "regime": "origin", "shift": "auto"},
    "target_count": 3,
    "mesh": {"dim": 1, "lo": [0], "hi": [2], "resolution": 1024},
    "intervals": {"rel_margin": 1e-4},
    "minimize": {"stop_tol": 1e-8, "metric": "sobolev", "strategy": "interval_midpoint"},
    "workers": 2,
    "output": {"nodal_dumps": true}
  })");
  CHECK(*rc.subcommand == Subcommand::Cascade);
  CHECK(rc.cascade.p == 2.0);
  CHECK(rc.cascade.lambda == 0.5);
  CHECK_FALSE(rc.cascade.shift.has_value());
  CHECK(rc.cascade.domain_hi[0] == 2.0);
  CHECK(rc.cascade.minimize.stop_tol == 1e-8);
  CHECK(rc.cascade.minimize.metric == DescentMetric::Sobolev);
  CHECK(rc.cascade.workers == 2);
  CHECK(rc.nodal_dumps);
  // bare G0 takes the model's p
  for (double s : {0.05, 0.3}) CHECK(rc.cascade.G.value(s) == builtin("G0", 2.0).value(s));
}

TEST_CASE("p must be positive") {
  const std::string msg = what_of([] { parse_config(R"({"model": {"p": -1}})"); });
  CHECK(msg.find("p > 0 required") != std::string::npos);
  CHECK_THROWS_AS(parse_config(R"({"model": {"p": -1}})"), PreconditionError);
  CHECK_THROWS_AS(parse_model_spec(R"j("G0(-2)")j"), PreconditionError);
}

TEST_CASE("schema violations name the key path") {
  CHECK(what_of([] { parse_config(R"({"model": {"F": "F7"}})"); }) == "model.F: unknown model 'F7'");
  CHECK(what_of([] { parse_config(R"({"mesh": {"resoluton": 3}})"); }) == "mesh.resoluton: unknown key");
  CHECK(what_of([] { parse_config(R"({"colour": 1})"); }) == "colour: unknown key");
  CHECK(what_of([] { parse_config(R"({"target_count": "4"})"); }) == "target_count: expected an integer");
  CHECK(what_of([] { parse_config(R"({"model": {"regime": "middle"}})"); }).find("model.regime") == 0);
  CHECK(what_of([] { parse_config(R"({"model": {"F": {"scale": {"factor": 2, "off": "F0"}}}})"); }) ==
        "model.F.scale.off: unknown key");
  CHECK(what_of([] { parse_config(R"({"subcommand": "plot"})"); }) == "subcommand: unknown value 'plot'");
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"shift": "big"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solve": {"k": 1}})"), ConfigError);
}

TEST_CASE("value checks run at parse time") {
  CHECK_THROWS_AS(parse_config(R"({"mesh": {"resolution": 4}})"), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"lambda": -1}})"), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"solve": {"eta": 0.1, "delta": 0.2}})"), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"calculus": {"window": [2, 1]}})"), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"bump": {"radius": 0.9}})"), PreconditionError);
}

TEST_CASE("model combinator trees") {
  const FunctionModel m = parse_model_spec(R"j({"sum": ["F0", {"scale": {"factor": 2, "of": "G0(2)"}}]})j");
  const FunctionModel f0 = builtin("F0");
  const FunctionModel g0 = builtin("G0", 2.0);
  for (double s : {0.01, 0.2, 0.7}) CHECK(m.value(s) == doctest::Approx(f0.value(s) + 2.0 * g0.value(s)));
  const FunctionModel q = parse_model_spec(R"({"add_quadratic": {"a": 3, "of": "zero"}})");
  CHECK(q.value(2.0) == doctest::Approx(6.0));
  const FunctionModel t = parse_model_spec(R"({"truncate": {"eta": 1, "of": {"add_quadratic": {"a": 2, "of": "zero"}}}})");
  CHECK(t.value(3.0) == doctest::Approx(1.0));
  const FunctionModel b = parse_model_spec(R"({"builtin": {"name": "Ginf", "p": 3}})");
  CHECK(b.value(2.0) == builtin("Ginf", 3.0).value(2.0));
  CHECK_THROWS_AS(parse_model_spec(R"({"product": ["F0", "F0"]})"), ConfigError);
  CHECK_THROWS_AS(parse_model_spec(R"({"sum": []})"), ConfigError);
  CHECK_THROWS_AS(parse_model_spec(R"j("F0(2)")j"), ConfigError);
  CHECK_THROWS_AS(parse_model_spec(R"({"truncate": {"eta": 0, "of": "F0"}})"), PreconditionError);
}

TEST_CASE("pre-execution checks per subcommand") {
  const RunConfig rc = parse_config(R"({"subcommand": "intervals"})");
  CHECK_THROWS_AS(validate_run_config(rc, Subcommand::Cascade), ConfigError);
  CHECK_NOTHROW(validate_run_config(rc, Subcommand::Intervals));
  const RunConfig plain = parse_config("{}");
  CHECK_THROWS_AS(validate_run_config(plain, Subcommand::LambdaThreshold), PreconditionError);
  CHECK_THROWS_AS(validate_run_config(plain, Subcommand::Solve), ConfigError);
  const RunConfig frac = parse_config(R"({"model": {"lambda_fraction": 0.5}})");
  CHECK_THROWS_AS(validate_run_config(frac, Subcommand::Cascade), PreconditionError);
  // F = -s², G = s²: l = -2, c_bar = 2, so lambda = 1 breaks lambda c_bar < -l
  const RunConfig hyp = parse_config(R"({"model": {
      "F": {"add_quadratic": {"a": -2, "of": "zero"}},
      "G": {"add_quadratic": {"a": 2, "of": "zero"}}, "lambda": 1}})");
  const std::string msg = what_of([&] { validate_run_config(hyp, Subcommand::Cascade); });
  CHECK(msg.find("requires lambda c_bar < -l0") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(PreconditionError("x")) == 3);
  CHECK(exit_code_for(ConfigError("x")) == 3);
  CHECK(exit_code_for(NumericalError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("sha256 test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("family CSV layout") {
  SolutionFamily f;
  const std::string header = "index,case_id,lambda,p,eta,delta,energy,linf,h01,l2,residual,iterations\n";
  CHECK(family_csv(f) == header);
  SolutionRecord r;
  r.case_id = "origin_p1";
  r.eta = 0.1;
  r.energy = -1.0 / 3.0;
  r.linf = 0.05;
  r.h01 = 0.25;
  r.l2 = 0.125;
  r.residual = 1e-9;
  r.iterations = 12;
  f.records.push_back(r);
  LevelInfo l;
  l.interval.delta = 0.08;
  l.interval.eta = 0.1;
  f.levels.push_back(l);
  const std::string csv = family_csv(f);
  CHECK(count_lines(csv) == 2);
  CHECK(csv == header +
                   "1,origin_p1,0,1,0.10000000000000001,0.080000000000000002,-0.33333333333333331,"
                   "0.050000000000000003,0.25,0.125,1.0000000000000001e-09,12\n");
}

TEST_CASE("interval and threshold CSVs") {
  std::vector<StabilityInterval> ivs{{0.5, 0.75, 0.6, 1e-3}};
  CHECK(intervals_csv({}) == "index,delta,eta,witness,margin\n");
  CHECK(intervals_csv(ivs) == "index,delta,eta,witness,margin\n1,0.5,0.75,0.59999999999999998,0.001\n");
  ThresholdReport t;
  t.theta = {-3.0, -2.0};
  t.s_tilde = {0.5};
  t.lambda_caps = {1.0};
  t.lambda_prime = {0.25};
  t.lambda_dprime = {0.5};
  CHECK(thresholds_csv(t) ==
        "index,theta,s_tilde,lambda_cap,lambda_prime,lambda_dprime\n1,-3,0.5,1,0.25,0.5\n2,-2,,,,\n");
}

TEST_CASE("IO failures surface the system message") {
  const std::string msg = what_of([] { write_text_file("/proc/oscincl/none/file.csv", "x"); });
  CHECK_FALSE(msg.empty());
  CHECK_THROWS_AS(load_config("/nonexistent/oscincl.json"), Error);
}

TEST_CASE("reruns of one config write identical bytes") {
  const RunConfig rc = parse_config(R"({
    "model": {"F": "Finf", "regime": "infinity"}, "target_count": 2,
    "intervals": {"points_per_decade": 20000, "rel_margin": 1e-5}})");
  const fs::path a = scratch("rerun_a");
  const fs::path b = scratch("rerun_b");
  std::ostringstream log;
  CHECK(run_subcommand(Subcommand::Intervals, rc, a, log, false) == 0);
  CHECK(run_subcommand(Subcommand::Intervals, rc, b, log, true) == 0);
  CHECK(slurp(a / "intervals.csv") == slurp(b / "intervals.csv"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(count_lines(slurp(a / "intervals.csv")) == 3);
  CHECK(slurp(a / "manifest.json").find("\"input_sha256\"") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("solve writes a one-record family") {
  const RunConfig rc = parse_config(R"({
    "mesh": {"resolution": 256},
    "solve": {"eta": 0.2233237821414053, "delta": 0.19822486629889363, "amplitudes": [0.0008]},
    "output": {"nodal_dumps": true}})");
  const fs::path out = scratch("solve");
  std::ostringstream log;
  CHECK(run_subcommand(Subcommand::Solve, rc, out, log, false) == 0);
  CHECK(count_lines(slurp(out / "family.csv")) == 2);
  CHECK(count_lines(slurp(out / "record_1.csv")) == 256);
  CHECK(slurp(out / "manifest.json").find("\"verdict\": \"pass\"") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("calculus-check over the built-ins") {
  const RunConfig rc = parse_config(R"({"calculus": {"checks": 200, "seed": 5}})");
  const fs::path out = scratch("calculus");
  std::ostringstream log;
  CHECK(run_subcommand(Subcommand::CalculusCheck, rc, out, log, false) == 0);
  CHECK(slurp(out / "calculus.csv") ==
        "model,checks,passed,failed\nF0,200,200,0\nG0(1),200,200,0\nFinf,200,200,0\nGinf(1),200,200,0\n");
  fs::remove_all(out);
}
