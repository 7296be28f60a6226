#include "oscincl/primitive.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "oscincl/function_model.hpp"

namespace oscincl {

namespace {

using GaussKronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr unsigned kMaxDepth = 8;
constexpr double kRelTol = 1e-12;

// Panels span about 0.05 rad of phase of the oscillating factor.
double f0_spacing(double s) { return std::min(0.05 * s * s, 0.05); }
double finf_spacing(double) { return 0.05; }

}  // namespace

std::complex<double> oscillatory_tail(double a, double x) {
  // Σ_m (a)_m (−i/X)^m with real magnitudes c_m = (a)_m / X^m; the powers of
  // −i cycle through 1, −i, −1, i.
  double re = 1.0;
  double im = 0.0;
  double c = 1.0;
  for (int m = 1; m < 200; ++m) {
    const double ratio = (a + m - 1) / x;
    if (ratio > 1.0) break;  // asymptotic series started to diverge
    c *= ratio;
    switch (m & 3) {
      case 0: re += c; break;
      case 1: im -= c; break;
      case 2: re -= c; break;
      case 3: im += c; break;
    }
    if (c < 1e-18) break;
  }
  const double scale = std::exp(-a * std::log(x));
  const double sn = std::sin(x);
  const double cs = std::cos(x);
  // i e^{iX} (re + i im) = i (cs + i sn)(re + i im)
  const double pr = cs * re - sn * im;
  const double pi = cs * im + sn * re;
  return {-pi * scale, pr * scale};
}

PanelTable::PanelTable(Integrand integrand, double lo, double top, Spacing spacing)
    : integrand_(integrand), spacing_(spacing) {
  nodes_.push_back(lo);
  cumulative_.push_back(0.0);
  double s = lo;
  while (s < top) {
    const double next = std::min(top, s + spacing_(s));
    cumulative_.push_back(cumulative_.back() + panel(s, next));
    nodes_.push_back(next);
    s = next;
  }
}

double PanelTable::panel(double a, double b) const {
  if (b <= a) return 0.0;
  return GaussKronrod::integrate(integrand_, a, b, kMaxDepth, kRelTol);
}

double PanelTable::partial_panel(double a, double b) const {
  if (b <= a) return 0.0;
  // A sub-panel of a table panel: the integrand is smooth on the scale of the
  // panel, so the single 15-point Kronrod rule is already exact to rounding.
  return GaussKronrod::integrate(integrand_, a, b, 0, kRelTol);
}

double PanelTable::integral_from_lo(double s) const {
  if (s <= nodes_.front()) return 0.0;
  if (s >= nodes_.back()) {
    double acc = cumulative_.back();
    double x = nodes_.back();
    while (x < s) {
      const double next = std::min(s, x + spacing_(x));
      acc += next < s ? panel(x, next) : partial_panel(x, next);
      x = next;
    }
    return acc;
  }
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
  const auto j = static_cast<std::size_t>(std::distance(nodes_.begin(), it)) - 1;
  return cumulative_[j] + partial_panel(nodes_[j], s);
}

F0Primitive::F0Primitive(double table_top)
    : value_at_cut_(0.0),
      table_(&f0_integrand, kSeriesCut, std::max(table_top, 2 * kSeriesCut), &f0_spacing) {
  value_at_cut_ = (*this)(kSeriesCut);
}

double F0Primitive::operator()(double s) const {
  if (s <= 0.0) return 0.0;
  if (s <= kSeriesCut) {
    // t = 1/x: ∫₀ˢ √t sin(1/t) dt = ∫_{1/s}^∞ x^{-5/2} sin x dx.
    return s * std::sqrt(s) / 3.0 + oscillatory_tail(2.5, 1.0 / s).imag();
  }
  return value_at_cut_ + table_.integral_from_lo(s);
}

namespace {

// ∫₀ˢ √t(½ + sin t) dt by the Taylor series of sin; used for s ≤ 0.5.
double finf_power_series(double s) {
  double acc = s * std::sqrt(s) / 3.0;
  double power = s * s * std::sqrt(s);  // s^{2k+5/2}
  double factorial = 1.0;               // (2k+1)!
  for (int k = 0; k < 30; ++k) {
    const double term = power / (factorial * (2 * k + 2.5));
    acc += (k % 2 == 0 ? term : -term);
    if (term < 1e-20) break;
    power *= s * s;
    factorial *= (2 * k + 2) * (2 * k + 3);
  }
  return acc;
}

}  // namespace

FinfPrimitive::FinfPrimitive()
    : value_at_cut_(finf_power_series(kPowerSeriesCut)),
      table_(&finf_integrand, kPowerSeriesCut, kAsymptoticCut, &finf_spacing) {}

double FinfPrimitive::operator()(double s) const {
  if (s <= 0.0) return 0.0;
  if (s <= kPowerSeriesCut) return finf_power_series(s);
  if (s <= kAsymptoticCut) return value_at_cut_ + table_.integral_from_lo(s);
  // ∫₀ˢ √t sin t dt = −√s cos s + ½ ∫₀ˢ cos t / √t dt and
  // ∫₀^∞ cos t / √t dt = √(π/2).
  const double root = std::sqrt(s);
  const double cos_tail = oscillatory_tail(0.5, s).real();
  return s * root / 3.0 - root * std::cos(s) +
         0.5 * (std::sqrt(std::numbers::pi / 2.0) - cos_tail);
}

}  // namespace oscincl
