#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oscincl/grad_interval.hpp"

namespace oscincl {

namespace detail {

// Node of a model tree. Nodes only see s > 0 (or s == 0 for the gradient
// hull); the zero extension to s < 0 lives in FunctionModel.
class ModelNode {
 public:
  virtual ~ModelNode() = default;
  virtual double value(double s) const = 0;
  virtual GradInterval grad(double s) const = 0;
  // Bound on max{|ξ| : ξ ∈ ∂f(s)} over [lo, hi]; nullopt when unknown.
  virtual std::optional<double> grad_bound(double lo, double hi) const = 0;
  virtual void breakpoints(double lo, double hi, std::vector<double>& out) const = 0;
  virtual std::string describe() const = 0;
};

}  // namespace detail

/// A locally Lipschitz function on ℝ, zero-extended to s ≤ 0, with an
/// interval-valued Clarke gradient. Immutable; copies share the tree.
class FunctionModel {
 public:
  explicit FunctionModel(std::shared_ptr<const detail::ModelNode> node);

  /// Value at s; exactly 0 for s ≤ 0. Throws NumericalError on a non-finite result.
  double value(double s) const;

  /// [min ∂f(s), max ∂f(s)]. For s < 0 this is [0,0]; at s = 0 it contains 0.
  GradInterval grad(double s) const;

  /// Upper bound on |ξ|, ξ ∈ ∂f(s), for s in [lo, hi] (the M_A of a window).
  std::optional<double> grad_bound(double lo, double hi) const;

  /// Sorted points in [lo, hi] where the gradient may be set-valued.
  std::vector<double> breakpoints(double lo, double hi) const;

  std::string describe() const;

  const std::shared_ptr<const detail::ModelNode>& node() const { return node_; }

  /// Model from plain callables evaluated for s > 0 (tests, ad-hoc stubs).
  static FunctionModel from_functions(std::string name, std::function<double(double)> value,
                                      std::function<GradInterval(double)> grad,
                                      std::optional<double> global_grad_bound = std::nullopt);

 private:
  std::shared_ptr<const detail::ModelNode> node_;
};

double eval(const FunctionModel& model, double s);
GradInterval grad_interval(const FunctionModel& model, double s);

// Combinators.
FunctionModel zero_model();
FunctionModel linear_model(double slope);
FunctionModel sum(const FunctionModel& f, const FunctionModel& g);
FunctionModel scale(double factor, const FunctionModel& f);
/// f(s) + a·s²/2 on s ≥ 0.
FunctionModel add_quadratic(const FunctionModel& f, double a);
/// s ↦ A(min(η, s)). Requires η > 0.
FunctionModel truncate(const FunctionModel& a, double eta);

// Built-in nonlinearities.
/// F₀(s) = ∫₀ˢ √t(½ + sin t⁻¹) dt. `table_top` bounds the memoized panel table.
FunctionModel f0_primitive(double table_top = 64.0);
/// G₀(s) = ln(1 + s^{p+2}) max{0, cos s⁻¹}.
FunctionModel g0_model(double p);
/// F_∞(s) = ∫₀ˢ √t(½ + sin t) dt.
FunctionModel finf_primitive();
/// G_∞(s) = s^p max{0, sin s}.
FunctionModel ginf_model(double p);

/// f₀(t) = √t(½ + sin t⁻¹) and f_∞(t) = √t(½ + sin t), t > 0.
double f0_integrand(double t);
double finf_integrand(double t);

enum class BuiltinName { F0, G0, Finf, Ginf };

/// Lookup by name ("F0", "G0", "Finf", "Ginf"); p is used by G0 and Ginf.
FunctionModel builtin(BuiltinName name, double p = 1.0);
FunctionModel builtin(const std::string& name, double p = 1.0);

/// Nonsmooth mean value check on [a, b]: the difference quotient must lie in
/// the hull of the gradient intervals at `samples` evenly spaced points,
/// widened by the largest jump between neighbouring samples.
bool lebourg_check(const FunctionModel& f, double a, double b, int samples);

}  // namespace oscincl
