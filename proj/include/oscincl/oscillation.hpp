#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oscincl/function_model.hpp"

namespace oscincl {

enum class Regime { Origin, Infinity };

const char* regime_name(Regime r);

/// Geometric sample grid running from `anchor` towards the limit point:
/// anchor·10^{−t} (origin, anchor ≤ 1) or anchor·10^{t} (infinity, anchor ≥ 1).
struct GridSpec {
  double anchor = 1.0;
  int decades = 6;
  int points_per_decade = 400;
  int window_decades = 2;  // trailing decades used for liminf / limsup
};

/// A limit estimate; `divergent` flags a ±∞ candidate instead of clamping.
struct LimitValue {
  double value = 0.0;
  bool divergent = false;
};

struct LimitEstimates {
  LimitValue l;      // liminf max ∂F(s)/s
  LimitValue c_lo;   // liminf min ∂G(s)/s^p
  LimitValue c_hi;   // limsup max ∂G(s)/s^p
  LimitValue ratio_liminf_F_over_s2;
  LimitValue ratio_limsup_F_over_s2;
};

LimitEstimates estimate_limits(const FunctionModel& F, const FunctionModel& G, double p, Regime regime,
                               const GridSpec& grid = {});

/// [δ, η] with max ∂A ≤ −margin on it; witness is the argmin of max ∂A.
struct StabilityInterval {
  double delta = 0.0;
  double eta = 0.0;
  double witness = 0.0;
  double margin = 0.0;  // −max over the interval of hi(∂A), as sampled
};

struct IntervalSearch {
  Regime regime = Regime::Origin;
  double rel_margin = 1e-3;  // margin = max(margin_req, rel_margin·depth of the run)
  int points_per_decade = 50000;
  std::size_t max_certify_samples = 2000000;
  /// Optional cap δᵢ ≤ cap(i), i counted from 1 in output order; intervals
  /// violating it are skipped.
  std::function<double(int)> delta_cap;
};

struct IntervalResult {
  std::vector<StabilityInterval> intervals;
  bool shortfall = false;
};

/// Up to `count` disjoint intervals inside [lo, hi], ordered towards the
/// limit point (decreasing for the origin, increasing for infinity).
IntervalResult find_stability_intervals(const FunctionModel& A, double lo, double hi, int count,
                                        double margin_req, const IntervalSearch& opts = {});

/// Re-sample [δ, η] with `samples` points; returns max hi(∂A) seen.
double max_upper_gradient(const FunctionModel& A, double lo, double hi, std::size_t samples);

/// Smallest L₀ with ½C(r,n) + (k/2 + l)m(Ω) < L₀(r/2)ⁿωₙ, plus 10%.
double compute_L0(double l_bound, double k, double mesh_measure, double r, int n, double Crn);

/// max(0, −inf A(s)/s²) over a geometric grid of [lo, hi].
double quadratic_lower_bound(const FunctionModel& A, double lo, double hi, int points = 20000);

struct AmplitudeSearch {
  double rho = 1e-3;  // search (ρδᵢ, δᵢ]
  int points = 400;
};

/// For each interval an s̃ ∈ (ρδᵢ, δᵢ] maximizing A(s)/s² subject to A(s̃) > L₀s̃²;
/// nullopt where none qualifies.
std::vector<std::optional<double>> find_test_amplitudes(const FunctionModel& A,
                                                        const std::vector<StabilityInterval>& intervals,
                                                        double L0, Regime regime,
                                                        const AmplitudeSearch& opts = {});

/// As above but throws NumericalError naming the first index without an amplitude.
std::vector<double> require_test_amplitudes(const FunctionModel& A,
                                            const std::vector<StabilityInterval>& intervals, double L0,
                                            Regime regime, const AmplitudeSearch& opts = {});

struct ThresholdReport {
  double L0 = 0.0;
  double zeta = 0.0;
  double G_sup = 0.0;
  std::vector<double> s_tilde;
  std::vector<double> theta;
  std::vector<double> lambda_caps;
  std::vector<double> lambda_prime;
  std::vector<double> lambda_dprime;
  double lambda_k = 0.0;
};

/// θ₁ < E₁ ≤ B₁ < θ₂ < … (origin) or θ₁ > B₁ ≥ E₁ > θ₂ > … (infinity), with B
/// the bump energies and E the minimizer energies. Interior θ are geometric
/// means of the neighbouring energies. Throws if the energies do not interleave.
std::vector<double> build_theta(const std::vector<double>& bump_energies,
                                const std::vector<double>& min_energies, Regime regime);

/// λ′ᵢ, λ″ᵢ and λ_k = min(1, caps, λ′, λ″). θ has k+1 entries. Throws
/// PreconditionError naming the first index violating the interleaving.
ThresholdReport compute_lambda_thresholds(const std::vector<double>& bump_energies,
                                          const std::vector<double>& min_energies,
                                          const std::vector<double>& theta, double G_sup,
                                          double mesh_measure, int k, Regime regime,
                                          const std::vector<double>& lambda_caps = {});

/// max |G| over [lo, hi] from dense sampling at `spacing`, padded by the
/// gradient bound times half the spacing.
double sup_abs(const FunctionModel& G, double lo, double hi, double spacing = 1e-4);

}  // namespace oscincl
