#include "oscincl/oscillation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oscincl/errors.hpp"

namespace oscincl {

namespace {

constexpr double kDivergenceFloor = 1e6;

std::vector<double> geometric_grid(double from, double to, int points_per_decade) {
  const double decades = std::log10(to / from);
  const auto n = static_cast<std::size_t>(std::ceil(std::abs(decades) * points_per_decade)) + 1;
  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) {
    s[j] = from * std::pow(10.0, decades * static_cast<double>(j) / static_cast<double>(n - 1));
  }
  s.back() = to;
  return s;
}

// Running extrema per decade of a sampled quantity; decade 0 is the one
// nearest the limit point.
struct DecadeExtrema {
  std::vector<double> lo;
  std::vector<double> hi;
};

LimitValue reduce(const DecadeExtrema& e, int window, bool want_min) {
  const auto& v = want_min ? e.lo : e.hi;
  const auto w = static_cast<std::size_t>(std::min<int>(window, static_cast<int>(v.size())));
  double best = want_min ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < w; ++d) best = want_min ? std::min(best, v[d]) : std::max(best, v[d]);
  LimitValue out{best, std::abs(best) > kDivergenceFloor};
  // Growth by a factor ≥ 2 per decade over the last three decades.
  if (v.size() >= 3) {
    bool growing = true;
    for (std::size_t d = 0; d < 2; ++d) {
      const double nearer = v[d];
      const double farther = v[d + 1];
      const bool same_side = want_min ? (nearer < 0.0 && farther < 0.0) : (nearer > 0.0 && farther > 0.0);
      if (!same_side || std::abs(nearer) < 2.0 * std::abs(farther)) growing = false;
    }
    out.divergent = out.divergent || growing;
  }
  return out;
}

template <class Fn>
DecadeExtrema decade_extrema(const GridSpec& grid, Regime regime, Fn&& q) {
  DecadeExtrema e;
  e.lo.assign(static_cast<std::size_t>(grid.decades), std::numeric_limits<double>::infinity());
  e.hi.assign(static_cast<std::size_t>(grid.decades), -std::numeric_limits<double>::infinity());
  const int total = grid.decades * grid.points_per_decade;
  for (int j = 0; j <= total; ++j) {
    const double t = static_cast<double>(j) / grid.points_per_decade;
    const double s = regime == Regime::Origin ? grid.anchor * std::pow(10.0, -t)
                                              : grid.anchor * std::pow(10.0, t);
    // Decade index counted back from the limit end of the grid.
    const int from_limit = std::min(grid.decades - 1, (total - j) / grid.points_per_decade);
    const double v = q(s);
    auto& lo = e.lo[static_cast<std::size_t>(from_limit)];
    auto& hi = e.hi[static_cast<std::size_t>(from_limit)];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return e;
}

}  // namespace

const char* regime_name(Regime r) { return r == Regime::Origin ? "origin" : "infinity"; }

LimitEstimates estimate_limits(const FunctionModel& F, const FunctionModel& G, double p, Regime regime,
                               const GridSpec& grid) {
  if (grid.decades <= 0 || grid.points_per_decade <= 0 || !(grid.anchor > 0.0)) {
    throw PreconditionError("estimate_limits: empty grid");
  }
  if ((regime == Regime::Origin && grid.anchor > 1.0) || (regime == Regime::Infinity && grid.anchor < 1.0)) {
    throw PreconditionError("estimate_limits: regime/grid mismatch");
  }
  if (!(p > 0.0)) throw PreconditionError("estimate_limits: p > 0 required");
  const int w = std::max(1, grid.window_decades);
  LimitEstimates out;
  out.l = reduce(decade_extrema(grid, regime, [&](double s) { return F.grad(s).hi / s; }), w, true);
  out.c_lo = reduce(decade_extrema(grid, regime, [&](double s) { return G.grad(s).lo / std::pow(s, p); }),
                    w, true);
  out.c_hi = reduce(decade_extrema(grid, regime, [&](double s) { return G.grad(s).hi / std::pow(s, p); }),
                    w, false);
  const auto ratio = decade_extrema(grid, regime, [&](double s) { return F.value(s) / (s * s); });
  out.ratio_liminf_F_over_s2 = reduce(ratio, w, true);
  out.ratio_limsup_F_over_s2 = reduce(ratio, w, false);
  return out;
}

double max_upper_gradient(const FunctionModel& A, double lo, double hi, std::size_t samples) {
  if (samples < 2) samples = 2;
  double worst = -std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / static_cast<double>(samples - 1);
  for (std::size_t j = 0; j < samples; ++j) {
    const double s = j + 1 == samples ? hi : lo + static_cast<double>(j) * step;
    worst = std::max(worst, A.grad(s).hi);
  }
  for (double b : A.breakpoints(lo, hi)) worst = std::max(worst, A.grad(b).hi);
  return worst;
}

namespace {

// Bisect the crossing of hi(∂A) = −margin between `outside` (above) and
// `inside` (at or below); returns the inside end.
double refine_endpoint(const FunctionModel& A, double outside, double inside, double margin) {
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (outside + inside);
    if (mid == outside || mid == inside) break;
    if (A.grad(mid).hi <= -margin) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return inside;
}

// Dense check of [δ, η]. On a violation the interval shrinks to the clean
// sample run containing the witness.
bool certify(const FunctionModel& A, StabilityInterval& iv, double margin, double slope,
             std::size_t max_samples) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double lipschitz = std::max(2.0 * slope, 1e-300);
    const double spacing = margin / lipschitz;
    const double width = iv.eta - iv.delta;
    std::size_t n = static_cast<std::size_t>(std::ceil(width / spacing)) + 1;
    n = std::clamp<std::size_t>(n, 64, max_samples);
    const double step = width / static_cast<double>(n - 1);
    double worst = -std::numeric_limits<double>::infinity();
    double clean_lo = iv.delta;
    double clean_hi = iv.eta;
    bool violated = false;
    double last_bad_below = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = j + 1 == n ? iv.eta : iv.delta + static_cast<double>(j) * step;
      const double h = A.grad(s).hi;
      if (h > -margin) {
        violated = true;
        if (s < iv.witness) {
          last_bad_below = s;
        } else if (s > iv.witness && clean_hi == iv.eta) {
          clean_hi = s - step;
        }
      } else {
        worst = std::max(worst, h);
      }
    }
    for (double b : A.breakpoints(iv.delta, iv.eta)) {
      const double h = A.grad(b).hi;
      if (h > -margin) {
        violated = true;
        if (b < iv.witness) last_bad_below = std::max(last_bad_below, b);
        else clean_hi = std::min(clean_hi, b - step);
      }
    }
    if (!violated) {
      iv.margin = -worst;
      return true;
    }
    if (last_bad_below >= 0.0) clean_lo = last_bad_below + step;
    if (!(clean_lo < iv.witness && iv.witness < clean_hi)) return false;
    iv.delta = clean_lo;
    iv.eta = clean_hi;
  }
  return false;
}

}  // namespace

IntervalResult find_stability_intervals(const FunctionModel& A, double lo, double hi, int count,
                                        double margin_req, const IntervalSearch& opts) {
  if (!(lo > 0.0) || !(hi > lo)) throw PreconditionError("find_stability_intervals: need 0 < lo < hi");
  if (!(margin_req > 0.0)) throw PreconditionError("find_stability_intervals: margin_req > 0 required");
  IntervalResult out;
  if (count <= 0) return out;

  const auto s = geometric_grid(lo, hi, opts.points_per_decade);
  std::vector<double> g(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) g[j] = A.grad(s[j]).hi;

  // Runs of negative samples, strictly inside the scan.
  struct Run {
    std::size_t a, b;
  };
  std::vector<Run> runs;
  for (std::size_t j = 0; j < s.size();) {
    if (g[j] < 0.0) {
      std::size_t k = j;
      while (k + 1 < s.size() && g[k + 1] < 0.0) ++k;
      if (j > 0 && k + 1 < s.size()) runs.push_back({j, k});
      j = k + 1;
    } else {
      ++j;
    }
  }
  if (opts.regime == Regime::Origin) std::reverse(runs.begin(), runs.end());

  for (const Run& run : runs) {
    if (static_cast<int>(out.intervals.size()) >= count) break;
    std::size_t wi = run.a;
    for (std::size_t j = run.a; j <= run.b; ++j) {
      if (g[j] < g[wi]) wi = j;
    }
    const double depth = -g[wi];
    const double margin = std::max(margin_req, opts.rel_margin * depth);
    if (!(depth > margin)) continue;
    std::size_t jl = wi;
    while (jl > run.a && g[jl - 1] <= -margin) --jl;
    std::size_t jr = wi;
    while (jr < run.b && g[jr + 1] <= -margin) ++jr;

    StabilityInterval iv;
    iv.witness = s[wi];
    iv.delta = refine_endpoint(A, s[jl - 1], s[jl], margin);
    iv.eta = refine_endpoint(A, s[jr + 1], s[jr], margin);

    double slope = 0.0;
    for (std::size_t j = jl; j <= jr + 1; ++j) {
      slope = std::max(slope, std::abs(g[j] - g[j - 1]) / (s[j] - s[j - 1]));
    }
    if (!certify(A, iv, margin, slope, opts.max_certify_samples)) continue;
    if (opts.delta_cap) {
      const int index = static_cast<int>(out.intervals.size()) + 1;
      if (iv.delta > opts.delta_cap(index)) continue;
    }
    out.intervals.push_back(iv);
  }
  out.shortfall = static_cast<int>(out.intervals.size()) < count;
  return out;
}

double compute_L0(double l_bound, double k, double mesh_measure, double r, int n, double Crn) {
  if (!(r > 0.0) || !(mesh_measure > 0.0)) throw PreconditionError("compute_L0: r > 0 and m(Ω) > 0 required");
  const double omega = n == 1 ? 2.0 : std::acos(-1.0);
  const double lhs = 0.5 * Crn + (0.5 * k + l_bound) * mesh_measure;
  const double ball = std::pow(0.5 * r, n) * omega;
  const double l0 = 1.1 * lhs / ball;
  return l0 > 0.0 ? l0 : std::numeric_limits<double>::min();
}

double quadratic_lower_bound(const FunctionModel& A, double lo, double hi, int points) {
  double worst = 0.0;
  const auto s = geometric_grid(lo, hi, std::max(1, static_cast<int>(points / std::max(1.0, std::log10(hi / lo)))));
  for (double x : s) worst = std::min(worst, A.value(x) / (x * x));
  return -worst;
}

std::vector<std::optional<double>> find_test_amplitudes(const FunctionModel& A,
                                                        const std::vector<StabilityInterval>& intervals,
                                                        double L0, Regime regime,
                                                        const AmplitudeSearch& opts) {
  (void)regime;  // both regimes search below δᵢ; the cascade pairs levels
  std::vector<std::optional<double>> out;
  out.reserve(intervals.size());
  for (const auto& iv : intervals) {
    const double top = iv.delta;
    const double bottom = opts.rho * top;
    std::optional<double> best;
    double best_ratio = -std::numeric_limits<double>::infinity();
    const int n = std::max(2, opts.points);
    for (int j = 0; j < n; ++j) {
      const double s = top * std::pow(bottom / top, static_cast<double>(j) / (n - 1));
      if (s <= bottom) continue;
      const double a = A.value(s);
      const double ratio = a / (s * s);
      if (a > L0 * s * s && ratio > best_ratio) {
        best_ratio = ratio;
        best = s;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<double> require_test_amplitudes(const FunctionModel& A,
                                            const std::vector<StabilityInterval>& intervals, double L0,
                                            Regime regime, const AmplitudeSearch& opts) {
  const auto found = find_test_amplitudes(A, intervals, L0, regime, opts);
  std::vector<double> out;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (!found[i]) {
      throw NumericalError("no test amplitude with A(s) > L0 s^2 for interval " + std::to_string(i + 1));
    }
    out.push_back(*found[i]);
  }
  return out;
}

std::vector<double> build_theta(const std::vector<double>& bump_energies,
                                const std::vector<double>& min_energies, Regime regime) {
  const std::size_t k = min_energies.size();
  if (bump_energies.size() != k || k == 0) throw PreconditionError("build_theta: need matching nonempty energies");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(min_energies[i] < 0.0) || !(bump_energies[i] < 0.0) || min_energies[i] > bump_energies[i]) {
      throw PreconditionError("build_theta: energies at index " + std::to_string(i + 1) +
                              " are not negative with T(u) <= T(w)");
    }
  }
  std::vector<double> theta(k + 1);
  if (regime == Regime::Origin) {
    theta[0] = 2.0 * min_energies[0];
    for (std::size_t i = 0; i + 1 < k; ++i) {
      if (!(bump_energies[i] < min_energies[i + 1])) {
        throw PreconditionError("build_theta: interleaving violated at index " + std::to_string(i + 1));
      }
      theta[i + 1] = -std::sqrt(bump_energies[i] * min_energies[i + 1]);
    }
    theta[k] = 0.5 * bump_energies[k - 1];
  } else {
    theta[0] = 0.5 * bump_energies[0];
    for (std::size_t i = 0; i + 1 < k; ++i) {
      if (!(bump_energies[i + 1] < min_energies[i])) {
        throw PreconditionError("build_theta: interleaving violated at index " + std::to_string(i + 1));
      }
      theta[i + 1] = -std::sqrt(min_energies[i] * bump_energies[i + 1]);
    }
    theta[k] = 2.0 * min_energies[k - 1];
  }
  return theta;
}

ThresholdReport compute_lambda_thresholds(const std::vector<double>& bump_energies,
                                          const std::vector<double>& min_energies,
                                          const std::vector<double>& theta, double G_sup,
                                          double mesh_measure, int k, Regime regime,
                                          const std::vector<double>& lambda_caps) {
  const auto kk = static_cast<std::size_t>(k);
  if (k <= 0 || bump_energies.size() < kk || min_energies.size() < kk || theta.size() < kk + 1) {
    throw PreconditionError("compute_lambda_thresholds: need k energies and k+1 theta values");
  }
  if (!(G_sup >= 0.0) || !(mesh_measure > 0.0)) {
    throw PreconditionError("compute_lambda_thresholds: G_sup >= 0 and m(Omega) > 0 required");
  }
  ThresholdReport r;
  r.G_sup = G_sup;
  r.theta.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(kk + 1));
  r.lambda_caps = lambda_caps;
  const double denom = mesh_measure * G_sup + 1.0;
  r.lambda_k = 1.0;
  for (double c : lambda_caps) r.lambda_k = std::min(r.lambda_k, c);
  for (std::size_t i = 0; i < kk; ++i) {
    const double b = bump_energies[i];
    const double e = min_energies[i];
    double lp = 0.0;
    double ldp = 0.0;
    if (regime == Regime::Origin) {
      if (!(theta[i] < e && e <= b && b < theta[i + 1])) {
        throw PreconditionError("theta does not interleave the energies at index " + std::to_string(i + 1));
      }
      lp = (theta[i + 1] - b) / denom;
      ldp = (e - theta[i]) / denom;
    } else {
      if (!(theta[i + 1] < e && e <= b && b < theta[i])) {
        throw PreconditionError("theta does not interleave the energies at index " + std::to_string(i + 1));
      }
      lp = (theta[i] - b) / denom;
      ldp = (e - theta[i + 1]) / denom;
    }
    if (!(lp > 0.0) || !(ldp > 0.0)) {
      throw PreconditionError("non-positive lambda threshold at index " + std::to_string(i + 1));
    }
    r.lambda_prime.push_back(lp);
    r.lambda_dprime.push_back(ldp);
    r.lambda_k = std::min({r.lambda_k, lp, ldp});
  }
  return r;
}

double sup_abs(const FunctionModel& G, double lo, double hi, double spacing) {
  if (!(hi > lo)) return std::abs(G.value(lo));
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / spacing)) + 1;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    best = std::max(best, std::abs(G.value(j + 1 == n ? hi : lo + static_cast<double>(j) * step)));
  }
  if (const auto bound = G.grad_bound(lo, hi)) best += 0.5 * step * *bound;
  return best;
}

}  // namespace oscincl
