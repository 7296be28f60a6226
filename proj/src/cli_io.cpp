#include "oscincl/cli_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "oscincl/discretization.hpp"
#include "oscincl/energy.hpp"
#include "oscincl/errors.hpp"

namespace oscincl {

using nlohmann::json;

const char* subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::Solve: return "solve";
    case Subcommand::Cascade: return "cascade";
    case Subcommand::Intervals: return "intervals";
    case Subcommand::LambdaThreshold: return "lambda-threshold";
    case Subcommand::CalculusCheck: return "calculus-check";
  }
  return "?";
}

std::optional<Subcommand> parse_subcommand(std::string_view name) {
  for (Subcommand s : {Subcommand::Solve, Subcommand::Cascade, Subcommand::Intervals,
                       Subcommand::LambdaThreshold, Subcommand::CalculusCheck}) {
    if (name == subcommand_name(s)) return s;
  }
  return std::nullopt;
}

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError(join(path, it.key()) + ": unknown key");
    }
  }
}

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(path + ": integer out of range");
  }
  return static_cast<int>(x);
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

template <class T, class Get>
void read(const json& obj, const std::string& path, std::string_view key, T& out, Get get) {
  if (const json* v = find(obj, key)) out = get(*v, join(path, key));
}

std::vector<double> as_number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::array<double, 2> as_point(const json& v, const std::string& path, std::array<double, 2> fill) {
  const auto xs = as_number_list(v, path);
  if (xs.empty() || xs.size() > 2) throw ConfigError(path + ": expected 1 or 2 coordinates");
  fill[0] = xs[0];
  if (xs.size() == 2) fill[1] = xs[1];
  return fill;
}

FunctionModel model_from_name(const std::string& name, const std::string& path, double default_p) {
  static const std::regex re(R"(^\s*(F0|Finf|G0|Ginf|zero)\s*(?:\(\s*([^)]*?)\s*\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) throw ConfigError(path + ": unknown model '" + name + "'");
  const std::string base = m[1];
  const bool has_arg = m[2].matched;
  if (base == "zero" || base == "F0" || base == "Finf") {
    if (has_arg) throw ConfigError(path + ": model '" + base + "' takes no parameter");
    return base == "zero" ? zero_model() : builtin(base);
  }
  double p = default_p;
  if (has_arg) {
    const std::string arg = m[2];
    std::size_t used = 0;
    try {
      p = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) throw ConfigError(path + ": bad parameter '" + arg + "'");
  }
  if (!(p > 0.0)) throw PreconditionError(path + ": p > 0 required");
  return builtin(base, p);
}

FunctionModel model_from_json(const json& v, const std::string& path, double default_p) {
  if (v.is_string()) return model_from_name(v.get<std::string>(), path, default_p);
  if (!v.is_object() || v.size() != 1) {
    throw ConfigError(path + ": expected a model name or a single-key combinator object");
  }
  const std::string op = v.begin().key();
  const json& arg = v.begin().value();
  const std::string sub = join(path, op);
  if (op == "sum") {
    if (!arg.is_array() || arg.empty()) throw ConfigError(sub + ": expected a non-empty array of models");
    FunctionModel acc = model_from_json(arg[0], sub + "[0]", default_p);
    for (std::size_t i = 1; i < arg.size(); ++i) {
      acc = sum(acc, model_from_json(arg[i], sub + "[" + std::to_string(i) + "]", default_p));
    }
    return acc;
  }
  const auto operand = [&](std::string_view coef) {
    check_keys(arg, sub, {coef, "of"});
    const json* c = find(arg, coef);
    const json* of = find(arg, "of");
    if (!c) throw ConfigError(join(sub, coef) + ": required");
    if (!of) throw ConfigError(join(sub, "of") + ": required");
    return std::pair{as_number(*c, join(sub, coef)), model_from_json(*of, join(sub, "of"), default_p)};
  };
  if (op == "scale") {
    auto [factor, f] = operand("factor");
    return scale(factor, f);
  }
  if (op == "add_quadratic") {
    auto [a, f] = operand("a");
    return add_quadratic(f, a);
  }
  if (op == "truncate") {
    auto [eta, f] = operand("eta");
    if (!(eta > 0.0)) throw PreconditionError(join(sub, "eta") + ": eta > 0 required");
    return truncate(f, eta);
  }
  if (op == "builtin") {
    check_keys(arg, sub, {"name", "p"});
    const json* n = find(arg, "name");
    if (!n) throw ConfigError(join(sub, "name") + ": required");
    std::string name = as_string(*n, join(sub, "name"));
    if (const json* p = find(arg, "p")) {
      const double pv = as_number(*p, join(sub, "p"));
      return model_from_name(name, sub, pv);
    }
    return model_from_name(name, sub, default_p);
  }
  throw ConfigError(path + ": unknown combinator '" + op + "'");
}

Regime as_regime(const json& v, const std::string& path) {
  const std::string s = as_string(v, path);
  if (s == "origin") return Regime::Origin;
  if (s == "infinity") return Regime::Infinity;
  throw ConfigError(path + ": expected \"origin\" or \"infinity\"");
}

SubgradientStrategy as_strategy(const json& v, const std::string& path) {
  const std::string s = as_string(v, path);
  if (s == "smooth_point") return SubgradientStrategy::SmoothPoint;
  if (s == "interval_midpoint") return SubgradientStrategy::IntervalMidpoint;
  if (s == "zero_if_contains_zero") return SubgradientStrategy::ZeroIfContainsZero;
  throw ConfigError(path + ": unknown strategy '" + s + "'");
}

DescentMetric as_metric(const json& v, const std::string& path) {
  const std::string s = as_string(v, path);
  if (s == "newton") return DescentMetric::Newton;
  if (s == "sobolev") return DescentMetric::Sobolev;
  if (s == "euclidean") return DescentMetric::Euclidean;
  throw ConfigError(path + ": unknown metric '" + s + "'");
}

const char* strategy_name(SubgradientStrategy s) {
  switch (s) {
    case SubgradientStrategy::SmoothPoint: return "smooth_point";
    case SubgradientStrategy::IntervalMidpoint: return "interval_midpoint";
    case SubgradientStrategy::ZeroIfContainsZero: return "zero_if_contains_zero";
  }
  return "?";
}

const char* metric_name(DescentMetric m) {
  switch (m) {
    case DescentMetric::Newton: return "newton";
    case DescentMetric::Sobolev: return "sobolev";
    case DescentMetric::Euclidean: return "euclidean";
  }
  return "?";
}

void parse_model_section(const json& j, CascadeConfig& c) {
  const std::string path = "model";
  check_keys(j, path, {"F", "G", "p", "lambda", "lambda_fraction", "regime", "shift"});
  read(j, path, "p", c.p, as_number);
  if (!(c.p > 0.0)) throw PreconditionError("model.p: p > 0 required");
  if (const json* v = find(j, "F")) c.F = model_from_json(*v, "model.F", c.p);
  if (const json* v = find(j, "G")) c.G = model_from_json(*v, "model.G", c.p);
  read(j, path, "lambda", c.lambda, as_number);
  if (const json* v = find(j, "lambda_fraction")) c.lambda_fraction = as_number(*v, "model.lambda_fraction");
  read(j, path, "regime", c.regime, as_regime);
  if (const json* v = find(j, "shift")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "auto") throw ConfigError("model.shift: expected a number or \"auto\"");
    } else {
      c.shift = as_number(*v, "model.shift");
    }
  }
}

void parse_minimize(const json& j, MinimizeOptions& m) {
  const std::string path = "minimize";
  check_keys(j, path,
             {"max_iters", "step_init", "armijo_c", "shrink", "max_backtracks", "step_tol", "stop_tol",
              "strategy", "metric", "nodal_sweeps", "sweeps_per_iter", "max_gamma_rounds", "polish_iters"});
  read(j, path, "max_iters", m.max_iters, as_int);
  read(j, path, "step_init", m.step_init, as_number);
  read(j, path, "armijo_c", m.armijo_c, as_number);
  read(j, path, "shrink", m.shrink, as_number);
  read(j, path, "max_backtracks", m.max_backtracks, as_int);
  read(j, path, "step_tol", m.step_tol, as_number);
  read(j, path, "stop_tol", m.stop_tol, as_number);
  read(j, path, "strategy", m.strategy, as_strategy);
  read(j, path, "metric", m.metric, as_metric);
  read(j, path, "nodal_sweeps", m.nodal_sweeps, as_bool);
  read(j, path, "sweeps_per_iter", m.sweeps_per_iter, as_int);
  read(j, path, "max_gamma_rounds", m.max_gamma_rounds, as_int);
  read(j, path, "polish_iters", m.polish_iters, as_int);
  if (!(m.step_init > 0.0)) throw PreconditionError("minimize.step_init > 0 required");
  if (!(m.armijo_c > 0.0 && m.armijo_c < 1.0)) throw PreconditionError("minimize.armijo_c in (0, 1) required");
  if (!(m.shrink > 0.0 && m.shrink < 1.0)) throw PreconditionError("minimize.shrink in (0, 1) required");
  if (m.max_backtracks < 1) throw PreconditionError("minimize.max_backtracks >= 1 required");
  if (!(m.step_tol >= 0.0)) throw PreconditionError("minimize.step_tol >= 0 required");
  if (m.sweeps_per_iter < 1) throw PreconditionError("minimize.sweeps_per_iter >= 1 required");
  if (m.max_gamma_rounds < 0) throw PreconditionError("minimize.max_gamma_rounds >= 0 required");
  if (m.polish_iters < 0) throw PreconditionError("minimize.polish_iters >= 0 required");
}

void parse_solve(const json& j, SolveConfig& s, double default_p) {
  const std::string path = "solve";
  check_keys(j, path, {"A", "k", "eta", "delta", "amplitudes", "zero_start"});
  if (const json* v = find(j, "A")) s.A = model_from_json(*v, "solve.A", default_p);
  if (const json* v = find(j, "k")) s.k = as_number(*v, "solve.k");
  if (s.A.has_value() != s.k.has_value()) throw ConfigError("solve: A and k must be given together");
  const json* eta = find(j, "eta");
  if (!eta) throw ConfigError("solve.eta: required");
  s.eta = as_number(*eta, "solve.eta");
  if (const json* v = find(j, "delta")) s.delta = as_number(*v, "solve.delta");
  read(j, path, "amplitudes", s.amplitudes, as_number_list);
  read(j, path, "zero_start", s.zero_start, as_bool);
  if (!(s.eta > 0.0)) throw PreconditionError("solve.eta > 0 required");
  if (s.delta && !(*s.delta > 0.0 && *s.delta <= s.eta)) throw PreconditionError("solve.delta in (0, eta] required");
  if (s.k && !(*s.k > 0.0)) throw PreconditionError("solve.k > 0 required");
  for (double a : s.amplitudes) {
    if (!(a > 0.0 && a <= s.eta)) throw PreconditionError("solve.amplitudes: each in (0, eta] required");
  }
}

std::vector<NamedModel> default_calculus_models() {
  return {{"F0", builtin("F0")}, {"G0(1)", builtin("G0", 1.0)}, {"Finf", builtin("Finf")},
          {"Ginf(1)", builtin("Ginf", 1.0)}};
}

void parse_calculus(const json& j, CalculusConfig& c) {
  const std::string path = "calculus";
  check_keys(j, path, {"models", "checks", "samples", "seed", "window"});
  if (const json* v = find(j, "models")) {
    if (!v->is_array() || v->empty()) throw ConfigError("calculus.models: expected a non-empty array of models");
    c.models.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string p = "calculus.models[" + std::to_string(i) + "]";
      c.models.push_back({(*v)[i].is_string() ? (*v)[i].get<std::string>() : (*v)[i].dump(),
                          model_from_json((*v)[i], p, 1.0)});
    }
  }
  read(j, path, "checks", c.checks, as_int);
  read(j, path, "samples", c.samples, as_int);
  if (const json* v = find(j, "seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("calculus.seed: expected a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  if (const json* v = find(j, "window")) {
    const auto w = as_number_list(*v, "calculus.window");
    if (w.size() != 2) throw ConfigError("calculus.window: expected [lo, hi]");
    c.window_lo = w[0];
    c.window_hi = w[1];
  }
  if (c.checks < 0) throw PreconditionError("calculus.checks >= 0 required");
  if (c.samples < 2) throw PreconditionError("calculus.samples >= 2 required");
  if (!(c.window_lo >= 0.0 && c.window_hi > c.window_lo)) {
    throw PreconditionError("calculus.window: 0 <= lo < hi required");
  }
}

}  // namespace

FunctionModel parse_model_spec(std::string_view json_text, double default_p) {
  json v;
  try {
    v = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return model_from_json(v, "model", default_p);
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_keys(root, "",
             {"subcommand", "model", "target_count", "mesh", "bump", "intervals", "limits", "amplitude",
              "minimize", "distinct", "max_level_attempts", "workers", "solve", "calculus", "output"});
  RunConfig rc;
  rc.canonical = root.dump();
  rc.calculus.models = default_calculus_models();
  CascadeConfig& c = rc.cascade;

  if (const json* v = find(root, "subcommand")) {
    const std::string s = as_string(*v, "subcommand");
    rc.subcommand = parse_subcommand(s);
    if (!rc.subcommand) throw ConfigError("subcommand: unknown value '" + s + "'");
  }
  if (const json* v = find(root, "model")) parse_model_section(*v, c);
  read(root, "", "target_count", c.target_count, as_int);
  read(root, "", "max_level_attempts", c.max_level_attempts, as_int);
  read(root, "", "workers", c.workers, as_int);

  if (const json* j = find(root, "mesh")) {
    check_keys(*j, "mesh", {"dim", "lo", "hi", "resolution"});
    read(*j, "mesh", "dim", c.dim, as_int);
    if (const json* v = find(*j, "lo")) c.domain_lo = as_point(*v, "mesh.lo", c.domain_lo);
    if (const json* v = find(*j, "hi")) c.domain_hi = as_point(*v, "mesh.hi", c.domain_hi);
    read(*j, "mesh", "resolution", c.resolution, as_int);
  }
  if (const json* j = find(root, "bump")) {
    check_keys(*j, "bump", {"center", "radius"});
    if (const json* v = find(*j, "center")) c.bump_center = as_point(*v, "bump.center", {0.5, 0.5});
    if (const json* v = find(*j, "radius")) c.bump_radius = as_number(*v, "bump.radius");
    if (c.bump_radius && !(*c.bump_radius > 0.0)) throw PreconditionError("bump.radius > 0 required");
  }
  if (const json* j = find(root, "intervals")) {
    const std::string p = "intervals";
    check_keys(*j, p, {"scan_lo", "scan_hi", "margin_req", "rel_margin", "points_per_decade"});
    if (const json* v = find(*j, "scan_lo")) c.scan_lo = as_number(*v, "intervals.scan_lo");
    if (const json* v = find(*j, "scan_hi")) c.scan_hi = as_number(*v, "intervals.scan_hi");
    read(*j, p, "margin_req", c.margin_req, as_number);
    read(*j, p, "rel_margin", c.rel_margin, as_number);
    read(*j, p, "points_per_decade", c.points_per_decade, as_int);
  }
  if (const json* j = find(root, "limits")) {
    const std::string p = "limits";
    check_keys(*j, p, {"anchor", "decades", "points_per_decade", "window_decades"});
    read(*j, p, "anchor", c.limit_grid.anchor, as_number);
    read(*j, p, "decades", c.limit_grid.decades, as_int);
    read(*j, p, "points_per_decade", c.limit_grid.points_per_decade, as_int);
    read(*j, p, "window_decades", c.limit_grid.window_decades, as_int);
    const GridSpec& g = c.limit_grid;
    if (!(g.anchor > 0.0)) throw PreconditionError("limits.anchor > 0 required");
    if (g.decades < 1 || g.points_per_decade < 2) {
      throw PreconditionError("limits: decades >= 1 and points_per_decade >= 2 required");
    }
    if (g.window_decades < 1 || g.window_decades > g.decades) {
      throw PreconditionError("limits.window_decades in [1, decades] required");
    }
  }
  if (const json* j = find(root, "amplitude")) {
    check_keys(*j, "amplitude", {"rho", "points"});
    if (const json* v = find(*j, "rho")) c.rho = as_number(*v, "amplitude.rho");
    read(*j, "amplitude", "points", c.amplitude_points, as_int);
  }
  if (const json* j = find(root, "minimize")) parse_minimize(*j, c.minimize);
  if (const json* j = find(root, "distinct")) {
    check_keys(*j, "distinct", {"linf_tol", "energy_tol"});
    read(*j, "distinct", "linf_tol", c.distinct_linf_tol, as_number);
    read(*j, "distinct", "energy_tol", c.distinct_energy_tol, as_number);
    if (!(c.distinct_linf_tol >= 0.0 && c.distinct_energy_tol >= 0.0)) {
      throw PreconditionError("distinct tolerances >= 0 required");
    }
  }
  if (const json* j = find(root, "solve")) {
    parse_solve(*j, rc.solve, c.p);
    rc.has_solve = true;
  }
  if (const json* j = find(root, "calculus")) parse_calculus(*j, rc.calculus);
  if (const json* j = find(root, "output")) {
    check_keys(*j, "output", {"nodal_dumps"});
    read(*j, "output", "nodal_dumps", rc.nodal_dumps, as_bool);
  }
  validate_cascade_config(c);
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

bool threshold_mode(const CascadeConfig& c) {
  return (c.regime == Regime::Origin && c.p < 1.0) || (c.regime == Regime::Infinity && c.p > 1.0);
}

EffectiveModelCase effective_model(const CascadeConfig& c) {
  return build_effective_model(c.F, c.G, c.p, c.lambda, c.regime, c.shift, c.limit_grid);
}

}  // namespace

void validate_run_config(const RunConfig& cfg, Subcommand sub) {
  if (cfg.subcommand && *cfg.subcommand != sub) {
    throw ConfigError(std::string("subcommand: config is for '") + subcommand_name(*cfg.subcommand) +
                      "', invoked as '" + subcommand_name(sub) + "'");
  }
  const CascadeConfig& c = cfg.cascade;
  validate_cascade_config(c);
  switch (sub) {
    case Subcommand::CalculusCheck:
      return;
    case Subcommand::Solve:
      if (!cfg.has_solve) throw ConfigError("solve: section required");
      if (!cfg.solve.A) (void)effective_model(c);
      return;
    case Subcommand::LambdaThreshold:
      if (!threshold_mode(c)) throw PreconditionError("thresholds apply to origin p < 1 and infinity p > 1 only");
      if (c.target_count < 1) throw PreconditionError("target_count >= 1 required for thresholds");
      (void)effective_model(c);
      return;
    case Subcommand::Cascade:
      if (c.lambda_fraction && !threshold_mode(c)) {
        throw PreconditionError("lambda_fraction applies to origin p < 1 and infinity p > 1 only");
      }
      (void)effective_model(c);
      return;
    case Subcommand::Intervals:
      (void)effective_model(c);
      return;
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json limit_json(const LimitValue& v) { return {{"value", v.value}, {"divergent", v.divergent}}; }

json model_json(const EffectiveModelCase& m) {
  return {{"case_id", m.case_id}, {"k", m.k},           {"shift", m.shift},
          {"c_bar", m.c_bar},     {"l", limit_json(m.l)}, {"A", m.A.describe()},
          {"threshold_mode", m.threshold_mode}};
}

json minimize_json(const MinimizeOptions& m) {
  return {{"max_iters", m.max_iters},
          {"step_init", m.step_init},
          {"armijo_c", m.armijo_c},
          {"shrink", m.shrink},
          {"max_backtracks", m.max_backtracks},
          {"step_tol", m.step_tol},
          {"stop_tol", m.stop_tol},
          {"strategy", strategy_name(m.strategy)},
          {"metric", metric_name(m.metric)},
          {"nodal_sweeps", m.nodal_sweeps},
          {"sweeps_per_iter", m.sweeps_per_iter},
          {"max_gamma_rounds", m.max_gamma_rounds},
          {"polish_iters", m.polish_iters}};
}

// Every setting after defaults are applied.
json resolved_json(const RunConfig& rc) {
  const CascadeConfig& c = rc.cascade;
  const bool origin = c.regime == Regime::Origin;
  const Mesh mesh = cascade_mesh(c);
  const BumpGeometry geom = cascade_bump(c, mesh);
  json r = {
      {"F", c.F.describe()},
      {"G", c.G.describe()},
      {"p", c.p},
      {"lambda", c.lambda},
      {"lambda_fraction", c.lambda_fraction ? json(*c.lambda_fraction) : json(nullptr)},
      {"regime", regime_name(c.regime)},
      {"shift", c.shift ? json(*c.shift) : json("auto")},
      {"target_count", c.target_count},
      {"mesh",
       {{"dim", c.dim},
        {"lo", {c.domain_lo[0], c.domain_lo[1]}},
        {"hi", {c.domain_hi[0], c.domain_hi[1]}},
        {"resolution", c.resolution}}},
      {"bump", {{"center", {geom.x0[0], geom.x0[1]}}, {"radius", geom.r}}},
      {"intervals",
       {{"scan_lo", c.scan_lo.value_or(origin ? 1e-6 : 1.0)},
        {"scan_hi", c.scan_hi.value_or(origin ? 1.0 : 1e3)},
        {"margin_req", c.margin_req},
        {"rel_margin", c.rel_margin},
        {"points_per_decade", c.points_per_decade}}},
      {"limits",
       {{"anchor", c.limit_grid.anchor},
        {"decades", c.limit_grid.decades},
        {"points_per_decade", c.limit_grid.points_per_decade},
        {"window_decades", c.limit_grid.window_decades}}},
      {"amplitude", {{"rho", c.rho.value_or(origin ? 1e-3 : 0.5)}, {"points", c.amplitude_points}}},
      {"minimize", minimize_json(c.minimize)},
      {"distinct", {{"linf_tol", c.distinct_linf_tol}, {"energy_tol", c.distinct_energy_tol}}},
      {"max_level_attempts", c.max_level_attempts},
      {"workers", c.workers},
      {"nodal_dumps", rc.nodal_dumps},
  };
  if (rc.has_solve) {
    const SolveConfig& s = rc.solve;
    r["solve"] = {{"A", s.A ? json(s.A->describe()) : json(nullptr)},
                  {"k", s.k ? json(*s.k) : json(nullptr)},
                  {"eta", s.eta},
                  {"delta", s.delta.value_or(s.eta)},
                  {"amplitudes", s.amplitudes},
                  {"zero_start", s.zero_start}};
  }
  json models = json::array();
  for (const auto& m : rc.calculus.models) models.push_back(m.model.describe());
  r["calculus"] = {{"models", models},
                   {"checks", rc.calculus.checks},
                   {"samples", rc.calculus.samples},
                   {"seed", rc.calculus.seed},
                   {"window", {rc.calculus.window_lo, rc.calculus.window_hi}}};
  return r;
}

json manifest_head(const RunConfig& rc, Subcommand sub) {
  const json resolved = resolved_json(rc);
  json m;
  m["subcommand"] = subcommand_name(sub);
  m["input_sha256"] = sha256_hex(rc.canonical + "\n" + resolved.dump());
  m["config"] = json::parse(rc.canonical);
  m["resolved"] = resolved;
  return m;
}

json thresholds_json(const ThresholdReport& t) {
  return {{"L0", t.L0},
          {"zeta", t.zeta},
          {"G_sup", t.G_sup},
          {"s_tilde", t.s_tilde},
          {"theta", t.theta},
          {"lambda_caps", t.lambda_caps},
          {"lambda_prime", t.lambda_prime},
          {"lambda_dprime", t.lambda_dprime},
          {"lambda_k", t.lambda_k}};
}

json verification_json(const VerificationReport& v) {
  json recs = json::array();
  for (const auto& r : v.records) {
    recs.push_back({{"residual_ok", r.residual_ok},
                    {"localization_ok", r.localization_ok},
                    {"energy_negative", r.energy_negative}});
  }
  return {{"records", recs},
          {"target_met", v.target_met},
          {"distinct", v.distinct},
          {"linf_monotone", v.linf_monotone},
          {"h01_monotone", v.h01_monotone},
          {"common_level_energies", v.common_level_energies},
          {"common_level_ordered", v.common_level_ordered},
          {"common_level_strict", v.common_level_strict},
          {"common_level_negative", v.common_level_negative},
          {"bounds_ok", v.bounds_ok ? json(*v.bounds_ok) : json(nullptr)},
          {"theta_window_ok", v.theta_window_ok ? json(*v.theta_window_ok) : json(nullptr)},
          {"failures", v.failures},
          {"verdict", v.verdict ? "pass" : "fail"}};
}

json family_json(const SolutionFamily& f) {
  json levels = json::array();
  for (const auto& l : f.levels) {
    levels.push_back({{"delta", l.interval.delta},
                      {"eta", l.interval.eta},
                      {"witness", l.interval.witness},
                      {"margin", l.interval.margin},
                      {"s_tilde", l.s_tilde},
                      {"s_tilde_qualified", l.s_tilde_qualified},
                      {"bump_energy", l.bump_energy},
                      {"lambda_cap", l.lambda_cap}});
  }
  json records = json::array();
  for (const auto& r : f.records) {
    records.push_back({{"converged", r.converged},
                       {"restart_index", r.restart_index},
                       {"diagnostic", r.diagnostic}});
  }
  return {{"model", model_json(f.model)},
          {"lambda", f.lambda},
          {"p", f.p},
          {"regime", regime_name(f.regime)},
          {"L0", f.L0},
          {"zeta", f.zeta},
          {"levels", levels},
          {"records", records},
          {"thresholds", f.thresholds ? thresholds_json(*f.thresholds) : json(nullptr)},
          {"shortfall", f.shortfall},
          {"flags", f.flags},
          {"verification", verification_json(f.verification)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string family_csv(const SolutionFamily& family) {
  std::string out = "index,case_id,lambda,p,eta,delta,energy,linf,h01,l2,residual,iterations\n";
  for (std::size_t i = 0; i < family.records.size(); ++i) {
    const SolutionRecord& r = family.records[i];
    const double delta = i < family.levels.size() ? family.levels[i].interval.delta : r.eta;
    out += std::to_string(i + 1) + "," + r.case_id + "," + g17(family.lambda) + "," + g17(family.p) + "," +
           g17(r.eta) + "," + g17(delta) + "," + g17(r.energy) + "," + g17(r.linf) + "," + g17(r.h01) + "," +
           g17(r.l2) + "," + g17(r.residual) + "," + std::to_string(r.iterations) + "\n";
  }
  return out;
}

std::string intervals_csv(const std::vector<StabilityInterval>& intervals) {
  std::string out = "index,delta,eta,witness,margin\n";
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    out += std::to_string(i + 1) + "," + g17(iv.delta) + "," + g17(iv.eta) + "," + g17(iv.witness) + "," +
           g17(iv.margin) + "\n";
  }
  return out;
}

std::string thresholds_csv(const ThresholdReport& t) {
  std::string out = "index,theta,s_tilde,lambda_cap,lambda_prime,lambda_dprime\n";
  const auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? g17(v[i]) : std::string(); };
  for (std::size_t i = 0; i < t.theta.size(); ++i) {
    out += std::to_string(i + 1) + "," + g17(t.theta[i]) + "," + at(t.s_tilde, i) + "," + at(t.lambda_caps, i) +
           "," + at(t.lambda_prime, i) + "," + at(t.lambda_dprime, i) + "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(path.string() + ": write failed");
}

namespace {

void write_nodal_dumps(const SolutionFamily& family, const RunConfig& cfg, const std::filesystem::path& dir) {
  if (!cfg.nodal_dumps) return;
  const Mesh mesh = cascade_mesh(cfg.cascade);
  for (std::size_t i = 0; i < family.records.size(); ++i) {
    std::ostringstream os;
    write_nodal_csv(os, mesh, family.records[i].u);
    write_text_file(dir / ("record_" + std::to_string(i + 1) + ".csv"), os.str());
  }
}

void emit(const SolutionFamily& family, const RunConfig& cfg, const std::filesystem::path& dir, Subcommand sub) {
  json m = manifest_head(cfg, sub);
  m["family"] = family_json(family);
  m["verdict"] = family.verification.verdict ? "pass" : "fail";
  write_text_file(dir / "family.csv", family_csv(family));
  write_text_file(dir / "manifest.json", dump(m));
  write_nodal_dumps(family, cfg, dir);
}

void log_family(std::ostream& log, const SolutionFamily& f, bool verbose) {
  log << f.model.case_id << ": " << f.records.size() << " record(s), lambda " << g17(f.lambda) << ", verdict "
      << (f.verification.verdict ? "pass" : "fail") << "\n";
  if (verbose) {
    for (std::size_t i = 0; i < f.records.size(); ++i) {
      const auto& r = f.records[i];
      log << "  " << i + 1 << " eta " << g17(r.eta) << " energy " << g17(r.energy) << " linf " << g17(r.linf)
          << " h01 " << g17(r.h01) << " residual " << g17(r.residual) << "\n";
    }
    for (const auto& s : f.flags) log << "  flag: " << s << "\n";
  }
  for (const auto& s : f.verification.failures) log << "  failure: " << s << "\n";
}

int run_solve(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log, bool verbose) {
  const CascadeConfig& c = cfg.cascade;
  const SolveConfig& s = cfg.solve;
  const Mesh mesh = cascade_mesh(c);
  const BumpGeometry geom = cascade_bump(c, mesh);
  SolutionFamily fam;
  fam.p = c.p;
  fam.regime = c.regime;
  fam.lambda = c.lambda;
  if (s.A) {
    fam.model.case_id = "custom";
    fam.model.k = *s.k;
    fam.model.A = *s.A;
  } else {
    fam.model = effective_model(c);
  }
  const double delta = s.delta.value_or(s.eta);
  const EnergyContext ctx(mesh, truncate(fam.model.A, s.eta), fam.model.k);
  MinimizeOptions opts = c.minimize;
  opts.delta = delta;
  opts.workers = c.workers;
  opts.restarts.clear();
  if (s.zero_start) opts.restarts.push_back(NodalField::Zero(static_cast<Eigen::Index>(mesh.size())));
  const std::vector<double> amps = s.amplitudes.empty() ? std::vector<double>{delta} : s.amplitudes;
  for (double a : amps) opts.restarts.push_back(bump(mesh, geom, a));

  SolutionRecord rec = minimize_over_ball(ctx, s.eta, opts);
  rec.case_id = fam.model.case_id;
  const double lo = rec.u.size() ? rec.u.minCoeff() : 0.0;
  const double hi = rec.u.size() ? rec.u.maxCoeff() : 0.0;
  RecordCheck chk;
  chk.residual_ok = rec.residual <= opts.stop_tol;
  chk.localization_ok = lo >= -1e-8 * delta && hi <= delta * (1.0 + 1e-8);
  chk.energy_negative = rec.energy < 0.0;
  VerificationReport& v = fam.verification;
  v.records.push_back(chk);
  if (!chk.residual_ok) v.failures.push_back("residual " + g17(rec.residual) + " above stop_tol");
  if (!chk.localization_ok) v.failures.push_back("solution leaves [0, delta]");
  v.verdict = v.failures.empty();
  LevelInfo level;
  level.interval.delta = delta;
  level.interval.eta = s.eta;
  fam.levels.push_back(level);
  fam.records.push_back(std::move(rec));

  emit(fam, cfg, out, Subcommand::Solve);
  log_family(log, fam, verbose);
  return v.verdict ? 0 : 2;
}

int run_intervals(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log, bool verbose) {
  const CascadeConfig& c = cfg.cascade;
  const bool origin = c.regime == Regime::Origin;
  const EffectiveModelCase eff = effective_model(c);
  IntervalSearch opts;
  opts.regime = c.regime;
  opts.rel_margin = c.rel_margin;
  opts.points_per_decade = c.points_per_decade;
  const IntervalResult res = find_stability_intervals(eff.A, c.scan_lo.value_or(origin ? 1e-6 : 1.0),
                                                      c.scan_hi.value_or(origin ? 1.0 : 1e3), c.target_count,
                                                      c.margin_req, opts);
  json list = json::array();
  for (const auto& iv : res.intervals) {
    list.push_back({{"delta", iv.delta}, {"eta", iv.eta}, {"witness", iv.witness}, {"margin", iv.margin}});
  }
  json m = manifest_head(cfg, Subcommand::Intervals);
  m["model"] = model_json(eff);
  m["intervals"] = list;
  m["shortfall"] = res.shortfall;
  m["verdict"] = res.shortfall ? "fail" : "pass";
  write_text_file(out / "intervals.csv", intervals_csv(res.intervals));
  write_text_file(out / "manifest.json", dump(m));
  log << eff.case_id << ": " << res.intervals.size() << " of " << c.target_count << " interval(s)"
      << (res.shortfall ? ", shortfall" : "") << "\n";
  if (verbose) {
    for (std::size_t i = 0; i < res.intervals.size(); ++i) {
      log << "  " << i + 1 << " [" << g17(res.intervals[i].delta) << ", " << g17(res.intervals[i].eta) << "]\n";
    }
  }
  return res.shortfall ? 2 : 0;
}

int run_thresholds(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log, bool verbose) {
  const ThresholdReport t = compute_thresholds(cfg.cascade);
  json m = manifest_head(cfg, Subcommand::LambdaThreshold);
  m["thresholds"] = thresholds_json(t);
  m["verdict"] = "pass";
  write_text_file(out / "thresholds.csv", thresholds_csv(t));
  write_text_file(out / "manifest.json", dump(m));
  log << "lambda_k " << g17(t.lambda_k) << "\n";
  if (verbose) {
    for (std::size_t i = 0; i < t.lambda_prime.size(); ++i) {
      log << "  " << i + 1 << " lambda' " << g17(t.lambda_prime[i]) << " lambda'' " << g17(t.lambda_dprime[i])
          << "\n";
    }
  }
  return 0;
}

int run_calculus(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log, bool verbose) {
  const CalculusConfig& cc = cfg.calculus;
  std::mt19937_64 rng(cc.seed);
  std::uniform_real_distribution<double> U(cc.window_lo, cc.window_hi);
  std::string csv = "model,checks,passed,failed\n";
  json rows = json::array();
  bool all = true;
  for (const auto& nm : cc.models) {
    int passed = 0;
    int done = 0;
    json first_failure = nullptr;
    while (done < cc.checks) {
      double a = U(rng);
      double b = U(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ++done;
      if (lebourg_check(nm.model, a, b, cc.samples)) {
        ++passed;
      } else if (first_failure.is_null()) {
        first_failure = {a, b};
      }
    }
    const int failed = done - passed;
    all = all && failed == 0;
    std::string name = nm.name;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      name = q + "\"";
    }
    csv += name + "," + std::to_string(done) + "," + std::to_string(passed) + "," + std::to_string(failed) + "\n";
    rows.push_back({{"model", nm.name},
                    {"checks", done},
                    {"passed", passed},
                    {"failed", failed},
                    {"first_failure", first_failure}});
    if (verbose || failed) log << nm.name << ": " << passed << "/" << done << " passed\n";
  }
  json m = manifest_head(cfg, Subcommand::CalculusCheck);
  m["results"] = rows;
  m["verdict"] = all ? "pass" : "fail";
  write_text_file(out / "calculus.csv", csv);
  write_text_file(out / "manifest.json", dump(m));
  log << "calculus-check: " << (all ? "pass" : "fail") << "\n";
  return all ? 0 : 2;
}

}  // namespace

void emit_family(const SolutionFamily& family, const RunConfig& cfg, const std::filesystem::path& dir) {
  emit(family, cfg, dir, Subcommand::Cascade);
}

int run_subcommand(Subcommand sub, const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log,
                   bool verbose) {
  validate_run_config(cfg, sub);
  switch (sub) {
    case Subcommand::Solve:
      return run_solve(cfg, out_dir, log, verbose);
    case Subcommand::Cascade: {
      const SolutionFamily fam = run_cascade(cfg.cascade);
      emit(fam, cfg, out_dir, Subcommand::Cascade);
      log_family(log, fam, verbose);
      return fam.verification.verdict ? 0 : 2;
    }
    case Subcommand::Intervals:
      return run_intervals(cfg, out_dir, log, verbose);
    case Subcommand::LambdaThreshold:
      return run_thresholds(cfg, out_dir, log, verbose);
    case Subcommand::CalculusCheck:
      return run_calculus(cfg, out_dir, log, verbose);
  }
  return 1;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  return 1;
}

}  // namespace oscincl
