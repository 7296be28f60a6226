#include "oscincl/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oscincl/errors.hpp"

namespace oscincl {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string case_name(Regime regime, double p) {
  std::string base = regime == Regime::Origin ? "origin" : "infinity";
  if (p == 1.0) return base + "_p1";
  return base + (p > 1.0 ? "_p_gt_1" : "_p_lt_1");
}

}  // namespace

EffectiveModelCase build_effective_model(const FunctionModel& F, const FunctionModel& G, double p,
                                         double lambda, Regime regime, std::optional<double> shift,
                                         const LimitEstimates& limits) {
  if (!(p > 0.0)) throw PreconditionError("p > 0 required");
  if (!(lambda >= 0.0)) throw PreconditionError("lambda >= 0 required");
  EffectiveModelCase out;
  out.case_id = case_name(regime, p);
  out.l = limits.l;
  out.c_bar = limits.c_hi.value;
  out.threshold_mode = (regime == Regime::Origin && p < 1.0) || (regime == Regime::Infinity && p > 1.0);
  const bool finite_l = !limits.l.divergent;
  const double minus_l = finite_l ? -limits.l.value : std::numeric_limits<double>::infinity();
  const char* lname = regime == Regime::Origin ? "l0" : "linf";

  if (p == 1.0) {
    if (limits.c_hi.divergent && lambda > 0.0) {
      throw PreconditionError(std::string("requires a finite c_bar with lambda c_bar < -") + lname);
    }
    const double lc = lambda * out.c_bar;
    const bool ok = regime == Regime::Origin ? lc < minus_l : lc <= minus_l;
    if (!ok) {
      throw PreconditionError(std::string("requires lambda c_bar ") + (regime == Regime::Origin ? "<" : "<=") +
                              " -" + lname + " (lambda c_bar = " + fmt(lc) + ", -" + lname + " = " +
                              fmt(minus_l) + ")");
    }
    if (shift) {
      out.shift = *shift;
    } else {
      out.shift = finite_l ? 0.5 * (lc + minus_l) : lc + 1.0;
    }
    if (!(out.shift > lc) || (finite_l && !(out.shift < minus_l))) {
      throw PreconditionError(std::string("requires lambda c_bar < shift < -") + lname + " (shift = " +
                              fmt(out.shift) + ")");
    }
    out.k = out.shift - lc;
    // A = F + (λ̃/2)s² + λ(G − (c̄/2)s²)
    FunctionModel a = add_quadratic(F, out.shift);
    if (lambda > 0.0) a = sum(a, scale(lambda, add_quadratic(G, -out.c_bar)));
    out.A = a;
  } else {
    if (finite_l && !(minus_l > 0.0)) {
      throw PreconditionError(std::string("requires ") + lname + " < 0 (estimate " + fmt(limits.l.value) + ")");
    }
    if (shift) {
      out.shift = *shift;
    } else {
      out.shift = finite_l ? 0.5 * minus_l : 1.0;
    }
    if (!(out.shift > 0.0) || (finite_l && !(out.shift < minus_l))) {
      throw PreconditionError(std::string("requires 0 < shift < -") + lname + " (shift = " + fmt(out.shift) + ")");
    }
    out.k = out.shift;
    FunctionModel a = add_quadratic(F, out.shift);
    if (lambda > 0.0) a = sum(a, scale(lambda, G));
    out.A = a;
  }
  if (!(out.k > 0.0)) throw PreconditionError("k > 0 required");
  return out;
}

EffectiveModelCase build_effective_model(const FunctionModel& F, const FunctionModel& G, double p,
                                         double lambda, Regime regime, std::optional<double> shift,
                                         const GridSpec& grid) {
  if (!(p > 0.0)) throw PreconditionError("p > 0 required");
  GridSpec g = grid;
  if (regime == Regime::Infinity && g.anchor < 1.0) g.anchor = 1.0;
  return build_effective_model(F, G, p, lambda, regime, shift, estimate_limits(F, G, p, regime, g));
}

Mesh cascade_mesh(const CascadeConfig& cfg) {
  return build_mesh(cfg.dim, cfg.domain_lo, cfg.domain_hi, cfg.resolution);
}

BumpGeometry cascade_bump(const CascadeConfig& cfg, const Mesh& mesh) {
  if (!cfg.bump_center && !cfg.bump_radius) return default_bump_geometry(mesh);
  const BumpGeometry def = default_bump_geometry(mesh);
  return make_bump_geometry(cfg.dim, cfg.bump_center.value_or(def.x0), cfg.bump_radius.value_or(def.r));
}

void validate_cascade_config(const CascadeConfig& cfg) {
  if (!(cfg.p > 0.0)) throw PreconditionError("p > 0 required");
  if (!(cfg.lambda >= 0.0)) throw PreconditionError("lambda >= 0 required");
  if (cfg.target_count < 0) throw PreconditionError("target_count >= 0 required");
  if (cfg.dim != 1 && cfg.dim != 2) throw PreconditionError("dim must be 1 or 2");
  if (cfg.resolution < 8) throw PreconditionError("resolution >= 8 required");
  for (int a = 0; a < cfg.dim; ++a) {
    if (!(cfg.domain_hi[a] > cfg.domain_lo[a])) throw PreconditionError("domain hi > lo required");
  }
  if (cfg.lambda_fraction && !(*cfg.lambda_fraction > 0.0 && *cfg.lambda_fraction <= 1.0)) {
    throw PreconditionError("lambda_fraction in (0, 1] required");
  }
  if (cfg.scan_lo && !(*cfg.scan_lo > 0.0)) throw PreconditionError("scan_lo > 0 required");
  if (cfg.scan_lo && cfg.scan_hi && !(*cfg.scan_hi > *cfg.scan_lo)) {
    throw PreconditionError("scan_hi > scan_lo required");
  }
  if (!(cfg.margin_req > 0.0)) throw PreconditionError("margin_req > 0 required");
  if (!(cfg.rel_margin >= 0.0)) throw PreconditionError("rel_margin >= 0 required");
  if (cfg.points_per_decade < 10) throw PreconditionError("points_per_decade >= 10 required");
  if (cfg.rho && !(*cfg.rho > 0.0 && *cfg.rho < 1.0)) throw PreconditionError("rho in (0, 1) required");
  if (cfg.amplitude_points < 2) throw PreconditionError("amplitude_points >= 2 required");
  if (cfg.workers < 1) throw PreconditionError("workers >= 1 required");
  if (cfg.max_level_attempts < 1) throw PreconditionError("max_level_attempts >= 1 required");
  if (!(cfg.minimize.stop_tol > 0.0)) throw PreconditionError("stop_tol > 0 required");
  if (cfg.minimize.max_iters < 1) throw PreconditionError("max_iters >= 1 required");
  const Mesh mesh = cascade_mesh(cfg);
  const BumpGeometry geom = cascade_bump(cfg, mesh);
  (void)bump(mesh, geom, 0.0);  // throws if the ball leaves Ω
}

namespace {

struct Setup {
  Mesh mesh;
  BumpGeometry geom;
  double scan_lo = 0.0;
  double scan_hi = 0.0;
  double rho = 0.0;
  LimitEstimates limits;
};

Setup make_setup(const CascadeConfig& cfg) {
  validate_cascade_config(cfg);
  Setup s{cascade_mesh(cfg), {}, 0.0, 0.0, 0.0, {}};
  s.geom = cascade_bump(cfg, s.mesh);
  const bool origin = cfg.regime == Regime::Origin;
  s.scan_lo = cfg.scan_lo.value_or(origin ? 1e-6 : 1.0);
  s.scan_hi = cfg.scan_hi.value_or(origin ? 1.0 : 1e3);
  if (!(s.scan_hi > s.scan_lo)) throw PreconditionError("scan_hi > scan_lo required");
  s.rho = cfg.rho.value_or(origin ? 1e-3 : 0.5);
  GridSpec g = cfg.limit_grid;
  if (!origin && g.anchor < 1.0) g.anchor = 1.0;
  s.limits = estimate_limits(cfg.F, cfg.G, cfg.p, cfg.regime, g);
  return s;
}

struct Amplitude {
  double s = 0.0;
  bool qualified = false;
  double energy = 0.0;
};

// Bump amplitude in (ρδ, δ] of least energy among those with A(s) > L₀s²;
// otherwise the least-energy negative bump.
Amplitude choose_amplitude(const EnergyContext& ctx, const BumpGeometry& geom, const StabilityInterval& iv,
                           double L0, double rho, int points) {
  const NodalField profile = bump(ctx.mesh, geom, 1.0);
  Amplitude best_q{0.0, true, std::numeric_limits<double>::infinity()};
  Amplitude best_any{0.0, false, std::numeric_limits<double>::infinity()};
  const double top = iv.delta;
  const double bottom = rho * top;
  for (int j = 0; j < points; ++j) {
    const double s = top * std::pow(bottom / top, static_cast<double>(j) / points);
    const double e = energy(ctx, s * profile);
    if (e < best_any.energy) best_any = {s, false, e};
    if (ctx.A.value(s) > L0 * s * s && e < best_q.energy) best_q = {s, true, e};
  }
  if (best_q.energy < 0.0) return best_q;
  return best_any;
}

struct Level {
  SolutionRecord rec;
  LevelInfo info;
};

Amplitude level_amplitude(const CascadeConfig& cfg, const Setup& st, const EffectiveModelCase& eff,
                          const StabilityInterval& iv, double L0) {
  const EnergyContext ctx(st.mesh, truncate(eff.A, iv.eta), eff.k);
  return choose_amplitude(ctx, st.geom, iv, L0, st.rho, cfg.amplitude_points);
}

Level solve_level(const CascadeConfig& cfg, const Setup& st, const EffectiveModelCase& eff,
                  const StabilityInterval& iv, const Amplitude& amp, const SolutionRecord* prev,
                  const NodalField* extra = nullptr) {
  const EnergyContext ctx(st.mesh, truncate(eff.A, iv.eta), eff.k);
  MinimizeOptions opts = cfg.minimize;
  opts.delta = iv.delta;
  opts.workers = cfg.workers;
  opts.restarts.clear();
  opts.restarts.push_back(NodalField::Zero(static_cast<Eigen::Index>(st.mesh.size())));
  if (amp.s > 0.0) {
    opts.restarts.push_back(bump(st.mesh, st.geom, amp.s));
    opts.restarts.push_back(bump(st.mesh, st.geom, 0.5 * amp.s));
  }
  if (prev) opts.restarts.push_back(gamma_truncate(prev->u, iv.delta));
  if (extra) opts.restarts.push_back(gamma_truncate(*extra, iv.delta));
  Level out;
  out.rec = minimize_over_ball(ctx, iv.eta, opts);
  out.rec.case_id = eff.case_id;
  out.info.interval = iv;
  out.info.s_tilde = amp.s;
  out.info.s_tilde_qualified = amp.qualified;
  out.info.bump_energy = amp.s > 0.0 ? amp.energy : 0.0;
  return out;
}

bool distinct_pair(const SolutionRecord& a, const SolutionRecord& b, double linf_tol, double energy_tol) {
  const double gap = (a.u - b.u).cwiseAbs().maxCoeff();
  const double scale = std::max({1e-300, std::abs(a.energy), std::abs(b.energy)});
  return gap > linf_tol && std::abs(a.energy - b.energy) > energy_tol * scale;
}

// δᵢ ≤ min{1/i, ½i⁻²[1 + m(max|∂F| + max|∂G| on [0,1])]⁻¹}
// Origin only. Deeper solutions lie in every earlier ball, so an earlier level
// whose energy is not below `start`'s was only a local minimum. Re-solve it
// from `start`, walking up while the order stays broken.
bool repair_origin_levels(const CascadeConfig& cfg, const Setup& st, const EffectiveModelCase& eff,
                          std::vector<Level>& levels, NodalField start, std::vector<std::string>& flags) {
  bool changed = false;
  for (std::size_t j = levels.size(); j-- > 0;) {
    Level& L = levels[j];
    const SolutionRecord* before = j > 0 ? &levels[j - 1].rec : nullptr;
    const Amplitude amp{L.info.s_tilde, L.info.s_tilde_qualified, L.info.bump_energy};
    Level redo = solve_level(cfg, st, eff, L.info.interval, amp, before, &start);
    if (!(redo.rec.energy < L.rec.energy)) return changed;
    flags.push_back("level " + std::to_string(j + 1) + ": re-solved from a deeper solution with lower energy");
    L.rec = std::move(redo.rec);
    changed = true;
    if (j == 0 || levels[j - 1].rec.energy < L.rec.energy) return changed;
    start = L.rec.u;
  }
  return changed;
}

std::function<double(int)> origin_delta_cap(const CascadeConfig& cfg, double measure) {
  auto sup_grad = [](const FunctionModel& f) {
    double best = 0.0;
    const int n = 200000;
    for (int j = 1; j <= n; ++j) {
      const GradInterval g = f.grad(static_cast<double>(j) / n);
      best = std::max({best, std::abs(g.lo), std::abs(g.hi)});
    }
    return best;
  };
  const double factor = 1.0 + measure * (sup_grad(cfg.F) + sup_grad(cfg.G));
  return [factor](int i) {
    const double di = static_cast<double>(i);
    return std::min(1.0 / di, 0.5 / (di * di * factor));
  };
}

struct Pass {
  std::vector<Level> levels;
  bool shortfall = false;
  std::vector<std::string> flags;
  double L0 = 0.0;
  double zeta = 0.0;
};

double level_L0(const Setup& st, const EffectiveModelCase& eff, double zeta) {
  const double lo = std::min(st.scan_lo, 0.5 * zeta);
  const double l_A = quadratic_lower_bound(eff.A, lo, zeta);
  return compute_L0(l_A, eff.k, st.mesh.measure, st.geom.r, st.mesh.dim, st.geom.Crn);
}

IntervalSearch search_options(const CascadeConfig& cfg) {
  IntervalSearch s;
  s.regime = cfg.regime;
  s.rel_margin = cfg.rel_margin;
  s.points_per_decade = cfg.points_per_decade;
  return s;
}

// Adaptive level selection: each level's interval lies beyond the previous
// solution (origin: η below its sup norm; infinity: δ above the previous η).
// With `interleave`, levels are also skipped until the bump and minimizer
// energies interleave as the threshold construction needs.
Pass adaptive_pass(const CascadeConfig& cfg, const Setup& st, const EffectiveModelCase& eff, bool interleave) {
  Pass pass;
  if (cfg.target_count == 0) return pass;
  const bool origin = cfg.regime == Regime::Origin;
  IntervalSearch search = search_options(cfg);
  std::function<double(int)> cap;
  if (origin && cfg.p < 1.0) cap = origin_delta_cap(cfg, st.mesh.measure);

  const auto first = find_stability_intervals(eff.A, st.scan_lo, st.scan_hi, 1, cfg.margin_req, search);
  if (first.intervals.empty()) {
    pass.shortfall = true;
    pass.flags.push_back("no stability interval in the scan window");
    return pass;
  }
  pass.zeta = origin ? first.intervals[0].eta : st.scan_hi;
  pass.L0 = level_L0(st, eff, pass.zeta);

  double lo = st.scan_lo;
  double hi = st.scan_hi;
  int attempts = 0;
  while (static_cast<int>(pass.levels.size()) < cfg.target_count) {
    const int index = static_cast<int>(pass.levels.size()) + 1;
    if (attempts++ >= cfg.max_level_attempts * cfg.target_count) {
      pass.shortfall = true;
      pass.flags.push_back("level " + std::to_string(index) + ": attempt budget exhausted");
      break;
    }
    if (!(hi > lo)) {
      pass.shortfall = true;
      pass.flags.push_back("level " + std::to_string(index) + ": scan window exhausted");
      break;
    }
    if (cap) search.delta_cap = [cap, index](int) { return cap(index); };
    const auto found = find_stability_intervals(eff.A, lo, hi, 1, cfg.margin_req, search);
    if (found.intervals.empty()) {
      pass.shortfall = true;
      pass.flags.push_back("level " + std::to_string(index) + ": no further stability interval");
      break;
    }
    const StabilityInterval iv = found.intervals[0];
    const SolutionRecord* prev = pass.levels.empty() ? nullptr : &pass.levels.back().rec;
    auto skip = [&](const std::string& why) {
      pass.flags.push_back("level " + std::to_string(index) + " skipped [" + fmt(iv.delta) + ", " + fmt(iv.eta) +
                           "]: " + why);
    };
    const Amplitude amp = level_amplitude(cfg, st, eff, iv, pass.L0);
    if (interleave && prev) {
      // The level minimum is at most its best bump energy, so these fail before minimizing.
      const Level& p = pass.levels.back();
      const bool ok = origin ? p.info.bump_energy < amp.energy : amp.energy < p.rec.energy;
      if (!ok) {
        skip("bump and minimizer energies do not interleave");
        if (origin) hi = 0.5 * iv.delta; else lo = iv.eta;
        continue;
      }
    }
    Level lv = solve_level(cfg, st, eff, iv, amp, prev);
    const bool nonzero = lv.rec.linf > 0.0 && lv.rec.energy < 0.0;
    if (!nonzero) {
      skip("minimizer has no negative energy");
      if (origin) hi = iv.delta; else lo = iv.eta;
      continue;
    }
    bool duplicate = false;
    for (const auto& other : pass.levels) {
      if (!distinct_pair(lv.rec, other.rec, cfg.distinct_linf_tol, cfg.distinct_energy_tol)) duplicate = true;
    }
    if (duplicate) {
      skip("duplicates an earlier solution");
      if (origin) hi = iv.delta; else lo = iv.eta;
      continue;
    }
    if (origin && prev && !(prev->energy < lv.rec.energy)) {
      skip("energy not above the previous level");
      if (repair_origin_levels(cfg, st, eff, pass.levels, lv.rec.u, pass.flags)) {
        hi = std::min(pass.levels.back().info.interval.delta, pass.levels.back().rec.linf);
      } else {
        hi = iv.delta;
      }
      continue;
    }
    if (interleave && prev) {
      const Level& p = pass.levels.back();
      const bool ok = origin ? p.info.bump_energy < lv.rec.energy : lv.info.bump_energy < p.rec.energy;
      if (!ok) {
        skip("bump and minimizer energies do not interleave");
        if (origin) hi = 0.5 * iv.delta; else lo = iv.eta;
        continue;
      }
    }
    if (!lv.info.s_tilde_qualified) {
      pass.flags.push_back("level " + std::to_string(index) + ": no bump amplitude with A(s) > L0 s^2; used the "
                                                              "least-energy negative bump");
    }
    if (origin) {
      hi = std::min(iv.delta, lv.rec.linf);
    } else {
      lo = iv.eta;
    }
    pass.levels.push_back(std::move(lv));
  }
  return pass;
}

Pass fixed_pass(const CascadeConfig& cfg, const Setup& st, const EffectiveModelCase& eff,
                const std::vector<StabilityInterval>& intervals, double L0, double zeta) {
  Pass pass;
  pass.L0 = L0;
  pass.zeta = zeta;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const SolutionRecord* prev = pass.levels.empty() ? nullptr : &pass.levels.back().rec;
    const Amplitude amp = level_amplitude(cfg, st, eff, intervals[i], L0);
    Level lv = solve_level(cfg, st, eff, intervals[i], amp, prev);
    if (!(lv.rec.energy < 0.0) || lv.rec.linf == 0.0) {
      pass.flags.push_back("level " + std::to_string(i + 1) + ": minimizer has no negative energy");
    }
    pass.levels.push_back(std::move(lv));
  }
  return pass;
}

// λᵢ = min(1, marginᵢ / max hi ∂G on [δᵢ, ηᵢ]), halved until A⁰ + λᵢG is
// re-certified on the interval by sampling.
double lambda_cap(const FunctionModel& A0, const FunctionModel& G, const StabilityInterval& iv) {
  const std::size_t samples = 20000;
  const double g = max_upper_gradient(G, iv.delta, iv.eta, samples);
  double cap = g > 0.0 ? std::min(1.0, iv.margin / g) : 1.0;
  for (int k = 0; k < 60; ++k) {
    if (max_upper_gradient(sum(A0, scale(cap, G)), iv.delta, iv.eta, samples) <= 0.0) return cap;
    cap *= 0.5;
  }
  return 0.0;
}

struct ThresholdRun {
  Pass pass;
  ThresholdReport report;
  EffectiveModelCase eff0;
};

ThresholdRun threshold_pass(const CascadeConfig& cfg, const Setup& st) {
  ThresholdRun out;
  out.eff0 = build_effective_model(cfg.F, cfg.G, cfg.p, 0.0, cfg.regime, cfg.shift, st.limits);
  out.pass = adaptive_pass(cfg, st, out.eff0, true);
  const auto n = out.pass.levels.size();
  if (static_cast<int>(n) < cfg.target_count) {
    std::string msg = "threshold pass found " + std::to_string(n) + " of " + std::to_string(cfg.target_count) +
                      " levels";
    for (const auto& f : out.pass.flags) msg += "; " + f;
    throw NumericalError(msg);
  }
  std::vector<double> B;
  std::vector<double> E;
  std::vector<double> caps;
  for (auto& lv : out.pass.levels) {
    B.push_back(lv.info.bump_energy);
    E.push_back(lv.rec.energy);
    lv.info.lambda_cap = lambda_cap(out.eff0.A, cfg.G, lv.info.interval);
    caps.push_back(lv.info.lambda_cap);
  }
  const double g_hi = cfg.regime == Regime::Origin ? 1.0 : out.pass.levels.back().info.interval.eta;
  const double G_sup = sup_abs(cfg.G, 0.0, g_hi);
  const auto theta = build_theta(B, E, cfg.regime);
  out.report = compute_lambda_thresholds(B, E, theta, G_sup, st.mesh.measure, static_cast<int>(n), cfg.regime, caps);
  out.report.L0 = out.pass.L0;
  out.report.zeta = out.pass.zeta;
  for (const auto& lv : out.pass.levels) out.report.s_tilde.push_back(lv.info.s_tilde);
  return out;
}

void fill_family(SolutionFamily& fam, Pass&& pass) {
  fam.L0 = pass.L0;
  fam.zeta = pass.zeta;
  fam.shortfall = pass.shortfall;
  for (auto& f : pass.flags) fam.flags.push_back(std::move(f));
  for (auto& lv : pass.levels) {
    fam.records.push_back(std::move(lv.rec));
    fam.levels.push_back(lv.info);
  }
}

}  // namespace

ThresholdReport compute_thresholds(const CascadeConfig& cfg) {
  const Setup st = make_setup(cfg);
  const bool mode = (cfg.regime == Regime::Origin && cfg.p < 1.0) || (cfg.regime == Regime::Infinity && cfg.p > 1.0);
  if (!mode) throw PreconditionError("thresholds apply to origin p < 1 and infinity p > 1 only");
  if (cfg.target_count < 1) throw PreconditionError("target_count >= 1 required for thresholds");
  return threshold_pass(cfg, st).report;
}

SolutionFamily run_cascade(const CascadeConfig& cfg) {
  const Setup st = make_setup(cfg);
  SolutionFamily fam;
  fam.p = cfg.p;
  fam.regime = cfg.regime;
  fam.lambda = cfg.lambda;

  const bool mode = (cfg.regime == Regime::Origin && cfg.p < 1.0) || (cfg.regime == Regime::Infinity && cfg.p > 1.0);
  if (mode && cfg.target_count > 0) {
    ThresholdRun tr = threshold_pass(cfg, st);
    const double lambda = cfg.lambda_fraction ? *cfg.lambda_fraction * tr.report.lambda_k : cfg.lambda;
    if (lambda > tr.report.lambda_k) {
      throw PreconditionError("requires lambda <= lambda_k (lambda = " + fmt(lambda) +
                              ", lambda_k = " + fmt(tr.report.lambda_k) + ")");
    }
    fam.lambda = lambda;
    fam.model = build_effective_model(cfg.F, cfg.G, cfg.p, lambda, cfg.regime, tr.eff0.shift, st.limits);
    std::vector<StabilityInterval> intervals;
    for (const auto& lv : tr.pass.levels) intervals.push_back(lv.info.interval);
    for (auto& f : tr.pass.flags) fam.flags.push_back("lambda = 0 pass: " + f);
    Pass pass = fixed_pass(cfg, st, fam.model, intervals, tr.pass.L0, tr.pass.zeta);
    fill_family(fam, std::move(pass));
    for (std::size_t i = 0; i < fam.levels.size(); ++i) fam.levels[i].lambda_cap = tr.report.lambda_caps[i];
    fam.thresholds = tr.report;
  } else {
    if (cfg.lambda_fraction) {
      throw PreconditionError("lambda_fraction applies to origin p < 1 and infinity p > 1 only");
    }
    fam.model = build_effective_model(cfg.F, cfg.G, cfg.p, cfg.lambda, cfg.regime, cfg.shift, st.limits);
    fill_family(fam, adaptive_pass(cfg, st, fam.model, false));
  }
  fam.verification = verify_theorem_predictions(fam, cfg);
  return fam;
}

VerificationReport verify_theorem_predictions(const SolutionFamily& family, const CascadeConfig& cfg) {
  VerificationReport r;
  const auto& recs = family.records;
  const std::size_t n = recs.size();
  const bool origin = family.regime == Regime::Origin;
  r.target_met = static_cast<int>(n) >= cfg.target_count;
  if (!r.target_met) {
    r.failures.push_back("found " + std::to_string(n) + " of " + std::to_string(cfg.target_count) + " records");
  }

  for (std::size_t i = 0; i < n; ++i) {
    RecordCheck c;
    const double delta = i < family.levels.size() ? family.levels[i].interval.delta : recs[i].eta;
    c.residual_ok = recs[i].residual <= cfg.minimize.stop_tol;
    c.localization_ok = recs[i].u.size() == 0 ||
                        (recs[i].u.minCoeff() >= -1e-8 * delta && recs[i].u.maxCoeff() <= delta * (1.0 + 1e-8));
    c.energy_negative = recs[i].energy < 0.0;
    const std::string tag = "record " + std::to_string(i + 1) + ": ";
    if (!c.residual_ok) r.failures.push_back(tag + "residual " + fmt(recs[i].residual));
    if (!c.localization_ok) r.failures.push_back(tag + "outside [0, delta]");
    if (!c.energy_negative) r.failures.push_back(tag + "energy not negative");
    r.records.push_back(c);
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!distinct_pair(recs[i], recs[j], cfg.distinct_linf_tol, cfg.distinct_energy_tol)) {
        r.distinct = false;
        r.failures.push_back("records " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                             " are not distinct");
      }
    }
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (origin) {
      if (!(recs[i + 1].linf < recs[i].linf)) r.linf_monotone = false;
      if (!(recs[i + 1].h01 < recs[i].h01)) r.h01_monotone = false;
    } else {
      if (!(recs[i + 1].linf > recs[i].linf)) r.linf_monotone = false;
      if (!(recs[i + 1].h01 > recs[i].h01)) r.h01_monotone = false;
    }
  }
  if (!r.linf_monotone) r.failures.push_back("sup norms not monotone");
  if (origin && !r.h01_monotone) r.failures.push_back("H1_0 norms not decreasing");

  if (n > 0 && !family.levels.empty()) {
    const double eta = origin ? family.levels.front().interval.eta : family.levels.back().interval.eta;
    const Mesh mesh = cascade_mesh(cfg);
    const EnergyContext ctx(mesh, truncate(family.model.A, eta), family.model.k);
    for (const auto& rec : recs) r.common_level_energies.push_back(energy(ctx, rec.u));
    const auto& e = r.common_level_energies;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!(e[i] < 0.0)) r.common_level_negative = false;
      if (i + 1 < e.size()) {
        if (origin) {
          if (!(e[i] < e[i + 1])) r.common_level_ordered = r.common_level_strict = false;
        } else {
          if (!(e[i + 1] <= e[i])) r.common_level_ordered = false;
          if (!(e[i + 1] < e[i])) r.common_level_strict = false;
        }
      }
    }
    if (!r.common_level_ordered) r.failures.push_back("common-level energies out of order");
    if (!r.common_level_negative) r.failures.push_back("common-level energy not negative");
  }

  if (origin && family.p < 1.0) {
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double bound = 1.0 / static_cast<double>(i + 1);
      if (!(recs[i].h01 < bound && recs[i].linf < bound)) ok = false;
    }
    r.bounds_ok = ok;
    if (!ok) r.failures.push_back("norm bounds 1/i violated");
  } else if (!origin && family.p > 1.0) {
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(recs[i].linf > static_cast<double>(i))) ok = false;
    }
    r.bounds_ok = ok;
    if (!ok) r.failures.push_back("sup norm bounds i - 1 violated");
  }

  if (family.thresholds) {
    const auto& th = family.thresholds->theta;
    bool ok = th.size() >= n + 1;
    for (std::size_t i = 0; ok && i < n; ++i) {
      const double e = recs[i].energy;
      ok = origin ? (th[i] < e && e < th[i + 1]) : (th[i + 1] < e && e < th[i]);
    }
    r.theta_window_ok = ok;
    if (!ok) r.failures.push_back("energies outside the theta windows");
  }

  r.verdict = r.failures.empty();
  return r;
}

}  // namespace oscincl
