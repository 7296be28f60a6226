#pragma once

#include <complex>
#include <vector>

namespace oscincl {

/// ∫_X^∞ x^{-a} e^{ix} dx via its asymptotic expansion
///   i e^{iX} X^{-a} Σ_m (a)_m (−i/X)^m,
/// truncated at the smallest term. Accurate to ~1e-17 relative for X ≥ 30.
std::complex<double> oscillatory_tail(double a, double x);

/// Cumulative table of ∫_{lo}^{s_j} integrand over a panel grid, built once at
/// construction. Lookups add one Gauss–Kronrod sub-panel from the nearest
/// node below, so the object is immutable and safe to share across threads.
class PanelTable {
 public:
  using Integrand = double (*)(double);
  using Spacing = double (*)(double);

  PanelTable(Integrand integrand, double lo, double top, Spacing spacing);

  /// ∫_{lo}^{s} integrand, for s ≥ lo. Beyond `top` the remainder is integrated
  /// panel by panel on the fly.
  double integral_from_lo(double s) const;

  double lo() const { return nodes_.front(); }
  double top() const { return nodes_.back(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  double panel(double a, double b) const;
  double partial_panel(double a, double b) const;

  Integrand integrand_;
  Spacing spacing_;
  std::vector<double> nodes_;
  std::vector<double> cumulative_;
};

/// F₀(s) = ∫₀ˢ √t(½ + sin t⁻¹) dt, s ≥ 0.
class F0Primitive {
 public:
  explicit F0Primitive(double table_top = 64.0);
  double operator()(double s) const;

  static constexpr double kSeriesCut = 0.02;  // below: tail expansion in 1/s

 private:
  double value_at_cut_;
  PanelTable table_;
};

/// F_∞(s) = ∫₀ˢ √t(½ + sin t) dt, s ≥ 0.
class FinfPrimitive {
 public:
  FinfPrimitive();
  double operator()(double s) const;

  static constexpr double kPowerSeriesCut = 0.5;
  static constexpr double kAsymptoticCut = 50.0;

 private:
  double value_at_cut_;
  PanelTable table_;
};

}  // namespace oscincl
