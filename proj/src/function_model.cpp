#include "oscincl/function_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oscincl/errors.hpp"
#include "oscincl/primitive.hpp"

namespace oscincl {

namespace {

using detail::ModelNode;
using NodePtr = std::shared_ptr<const ModelNode>;

constexpr double kBreakpointRelTol = 1e-12;
// Breakpoint enumeration is capped; windows reaching towards an accumulation
// point only report the outermost ones.
constexpr std::size_t kMaxBreakpoints = 100000;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class ZeroNode final : public ModelNode {
 public:
  double value(double) const override { return 0.0; }
  GradInterval grad(double) const override { return {}; }
  std::optional<double> grad_bound(double, double) const override { return 0.0; }
  void breakpoints(double, double, std::vector<double>&) const override {}
  std::string describe() const override { return "zero"; }
};

class LinearNode final : public ModelNode {
 public:
  explicit LinearNode(double c) : c_(c) {}
  double value(double s) const override { return c_ * s; }
  GradInterval grad(double) const override { return GradInterval::point(c_); }
  std::optional<double> grad_bound(double, double) const override { return std::abs(c_); }
  void breakpoints(double, double, std::vector<double>&) const override {}
  std::string describe() const override { return "linear(" + format_number(c_) + ")"; }

 private:
  double c_;
};

class SumNode final : public ModelNode {
 public:
  SumNode(NodePtr f, NodePtr g) : f_(std::move(f)), g_(std::move(g)) {}
  double value(double s) const override { return f_->value(s) + g_->value(s); }
  GradInterval grad(double s) const override { return f_->grad(s) + g_->grad(s); }
  std::optional<double> grad_bound(double lo, double hi) const override {
    const auto a = f_->grad_bound(lo, hi);
    const auto b = g_->grad_bound(lo, hi);
    if (!a || !b) return std::nullopt;
    return *a + *b;
  }
  void breakpoints(double lo, double hi, std::vector<double>& out) const override {
    f_->breakpoints(lo, hi, out);
    g_->breakpoints(lo, hi, out);
  }
  std::string describe() const override {
    return "sum(" + f_->describe() + ", " + g_->describe() + ")";
  }

 private:
  NodePtr f_, g_;
};

class ScaleNode final : public ModelNode {
 public:
  ScaleNode(double c, NodePtr f) : c_(c), f_(std::move(f)) {}
  double value(double s) const override { return c_ * f_->value(s); }
  GradInterval grad(double s) const override { return c_ * f_->grad(s); }
  std::optional<double> grad_bound(double lo, double hi) const override {
    const auto b = f_->grad_bound(lo, hi);
    if (!b) return std::nullopt;
    return std::abs(c_) * *b;
  }
  void breakpoints(double lo, double hi, std::vector<double>& out) const override {
    if (c_ != 0.0) f_->breakpoints(lo, hi, out);
  }
  std::string describe() const override {
    return "scale(" + format_number(c_) + ", " + f_->describe() + ")";
  }

 private:
  double c_;
  NodePtr f_;
};

class QuadraticNode final : public ModelNode {
 public:
  QuadraticNode(NodePtr f, double a) : f_(std::move(f)), a_(a) {}
  double value(double s) const override { return f_->value(s) + 0.5 * a_ * s * s; }
  GradInterval grad(double s) const override { return f_->grad(s) + a_ * s; }
  std::optional<double> grad_bound(double lo, double hi) const override {
    const auto b = f_->grad_bound(lo, hi);
    if (!b) return std::nullopt;
    return *b + std::abs(a_) * std::max(std::abs(lo), std::abs(hi));
  }
  void breakpoints(double lo, double hi, std::vector<double>& out) const override {
    f_->breakpoints(lo, hi, out);
  }
  std::string describe() const override {
    return "add_quadratic(" + f_->describe() + ", " + format_number(a_) + ")";
  }

 private:
  NodePtr f_;
  double a_;
};

class TruncateNode final : public ModelNode {
 public:
  TruncateNode(NodePtr f, double eta) : f_(std::move(f)), eta_(eta) {}
  double value(double s) const override { return f_->value(std::min(eta_, s)); }
  GradInterval grad(double s) const override {
    if (s < eta_) return f_->grad(s);
    if (s == eta_) return f_->grad(eta_).with_zero();
    return {};
  }
  std::optional<double> grad_bound(double lo, double hi) const override {
    if (lo > eta_) return 0.0;
    return f_->grad_bound(lo, std::min(hi, eta_));
  }
  void breakpoints(double lo, double hi, std::vector<double>& out) const override {
    if (lo > eta_) return;
    f_->breakpoints(lo, std::min(hi, eta_), out);
    if (hi >= eta_) out.push_back(eta_);
  }
  std::string describe() const override {
    return "truncate(" + f_->describe() + ", " + format_number(eta_) + ")";
  }

 private:
  NodePtr f_;
  double eta_;
};

class CallableNode final : public ModelNode {
 public:
  CallableNode(std::string name, std::function<double(double)> value,
               std::function<GradInterval(double)> grad, std::optional<double> bound)
      : name_(std::move(name)), value_(std::move(value)), grad_(std::move(grad)), bound_(bound) {}
  double value(double s) const override { return value_(s); }
  GradInterval grad(double s) const override { return grad_(s); }
  std::optional<double> grad_bound(double, double) const override { return bound_; }
  void breakpoints(double, double, std::vector<double>&) const override {}
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  std::function<double(double)> value_;
  std::function<GradInterval(double)> grad_;
  std::optional<double> bound_;
};

class F0Node final : public ModelNode {
 public:
  explicit F0Node(double table_top) : primitive_(table_top) {}
  double value(double s) const override { return primitive_(s); }
  GradInterval grad(double s) const override {
    return s > 0.0 ? GradInterval::point(f0_integrand(s)) : GradInterval{};
  }
  std::optional<double> grad_bound(double, double hi) const override {
    return 1.5 * std::sqrt(std::max(hi, 0.0));
  }
  void breakpoints(double, double, std::vector<double>&) const override {}
  std::string describe() const override { return "F0"; }

 private:
  F0Primitive primitive_;
};

class FinfNode final : public ModelNode {
 public:
  double value(double s) const override { return primitive_(s); }
  GradInterval grad(double s) const override {
    return s > 0.0 ? GradInterval::point(finf_integrand(s)) : GradInterval{};
  }
  std::optional<double> grad_bound(double, double hi) const override {
    return 1.5 * std::sqrt(std::max(hi, 0.0));
  }
  void breakpoints(double, double, std::vector<double>&) const override {}
  std::string describe() const override { return "Finf"; }

 private:
  FinfPrimitive primitive_;
};

// ln(1 + s^{p+2}) max{0, cos s⁻¹}; kinks where 1/s = π/2 + jπ.
class G0Node final : public ModelNode {
 public:
  explicit G0Node(double p) : p_(p) {}
  double value(double s) const override {
    if (s <= 0.0) return 0.0;
    return std::log1p(std::pow(s, p_ + 2.0)) * std::max(0.0, std::cos(1.0 / s));
  }
  GradInterval grad(double s) const override {
    if (s <= 0.0) return {};
    const double x = 1.0 / s;
    const double log_term = std::log1p(std::pow(s, p_ + 2.0));
    const double j = std::nearbyint(x / std::numbers::pi - 0.5);
    if (j >= 0.0) {
      const double xj = std::numbers::pi * (j + 0.5);
      if (std::abs(x - xj) <= kBreakpointRelTol * x) {
        // cos vanishes; only the product term of the active branch survives.
        const double sign = std::fmod(j, 2.0) == 0.0 ? 1.0 : -1.0;
        return GradInterval::point(log_term * sign * xj * xj).with_zero();
      }
    }
    const double c = std::cos(x);
    if (c <= 0.0) return {};
    const double sp1 = std::pow(s, p_ + 1.0);
    const double d = (p_ + 2.0) * sp1 / (1.0 + sp1 * s) * c + log_term * std::sin(x) * x * x;
    return GradInterval::point(d);
  }
  std::optional<double> grad_bound(double, double hi) const override {
    hi = std::max(hi, 0.0);
    // |ln(1+s^{p+2})/s²| ≤ s^p and (p+2)s^{p+1}/(1+s^{p+2}) ≤ (p+2)s^{p+1}.
    return (p_ + 2.0) * std::pow(hi, p_ + 1.0) + std::pow(hi, p_);
  }
  void breakpoints(double lo, double hi, std::vector<double>& out) const override {
    if (hi <= 0.0) return;
    lo = std::max(lo, 0.0);
    const double x_lo = 1.0 / hi;
    const double j_first = std::max(0.0, std::ceil(x_lo / std::numbers::pi - 0.5));
    const double j_last = lo > 0.0 ? std::floor(1.0 / lo / std::numbers::pi - 0.5)
                                   : j_first + static_cast<double>(kMaxBreakpoints);
    for (double j = j_first; j <= j_last && out.size() < kMaxBreakpoints; j += 1.0) {
      out.push_back(1.0 / (std::numbers::pi * (j + 0.5)));
    }
  }
  std::string describe() const override { return "G0(" + format_number(p_) + ")"; }

 private:
  double p_;
};

// s^p max{0, sin s}; kinks at s = jπ.
class GinfNode final : public ModelNode {
 public:
  explicit GinfNode(double p) : p_(p) {}
  double value(double s) const override {
    if (s <= 0.0) return 0.0;
    return std::pow(s, p_) * std::max(0.0, std::sin(s));
  }
  GradInterval grad(double s) const override {
    if (s <= 0.0) return {};
    const double j = std::nearbyint(s / std::numbers::pi);
    if (j >= 1.0 && std::abs(s - j * std::numbers::pi) <= kBreakpointRelTol * s) {
      const double sign = std::fmod(j, 2.0) == 0.0 ? 1.0 : -1.0;
      return GradInterval::point(sign * std::pow(j * std::numbers::pi, p_)).with_zero();
    }
    const double sn = std::sin(s);
    if (sn <= 0.0) return {};
    const double d = p_ * std::pow(s, p_ - 1.0) * sn + std::pow(s, p_) * std::cos(s);
    return GradInterval::point(d);
  }
  std::optional<double> grad_bound(double, double hi) const override {
    hi = std::max(hi, 0.0);
    // |sin s| ≤ min(1, s).
    if (p_ >= 1.0) return p_ * std::pow(hi, p_ - 1.0) * std::min(1.0, hi) + std::pow(hi, p_);
    return (p_ + 1.0) * std::pow(hi, p_);
  }
  void breakpoints(double lo, double hi, std::vector<double>& out) const override {
    const double j_first = std::max(1.0, std::ceil(lo / std::numbers::pi));
    for (double j = j_first; j * std::numbers::pi <= hi && out.size() < kMaxBreakpoints; j += 1.0) {
      out.push_back(j * std::numbers::pi);
    }
  }
  std::string describe() const override { return "Ginf(" + format_number(p_) + ")"; }

 private:
  double p_;
};

}  // namespace

FunctionModel::FunctionModel(std::shared_ptr<const detail::ModelNode> node) : node_(std::move(node)) {
  if (!node_) throw PreconditionError("FunctionModel: null node");
}

double FunctionModel::value(double s) const {
  if (!(s > 0.0)) {
    if (std::isnan(s)) throw NumericalError("model " + describe() + ": NaN argument");
    return 0.0;
  }
  const double v = node_->value(s);
  if (!std::isfinite(v)) {
    throw NumericalError("model " + describe() + " is not finite at s = " + format_number(s));
  }
  return v;
}

GradInterval FunctionModel::grad(double s) const {
  if (s < 0.0) return {};
  if (s == 0.0) return node_->grad(0.0).with_zero();
  return node_->grad(s);
}

std::optional<double> FunctionModel::grad_bound(double lo, double hi) const {
  return node_->grad_bound(lo, hi);
}

std::vector<double> FunctionModel::breakpoints(double lo, double hi) const {
  std::vector<double> out;
  node_->breakpoints(lo, hi, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::erase_if(out, [&](double b) { return b < lo || b > hi; });
  return out;
}

std::string FunctionModel::describe() const { return node_->describe(); }

FunctionModel FunctionModel::from_functions(std::string name, std::function<double(double)> value,
                                            std::function<GradInterval(double)> grad,
                                            std::optional<double> global_grad_bound) {
  return FunctionModel(std::make_shared<CallableNode>(std::move(name), std::move(value),
                                                      std::move(grad), global_grad_bound));
}

double eval(const FunctionModel& model, double s) { return model.value(s); }
GradInterval grad_interval(const FunctionModel& model, double s) { return model.grad(s); }

FunctionModel zero_model() { return FunctionModel(std::make_shared<ZeroNode>()); }
FunctionModel linear_model(double slope) { return FunctionModel(std::make_shared<LinearNode>(slope)); }

FunctionModel sum(const FunctionModel& f, const FunctionModel& g) {
  return FunctionModel(std::make_shared<SumNode>(f.node(), g.node()));
}

FunctionModel scale(double factor, const FunctionModel& f) {
  return FunctionModel(std::make_shared<ScaleNode>(factor, f.node()));
}

FunctionModel add_quadratic(const FunctionModel& f, double a) {
  return FunctionModel(std::make_shared<QuadraticNode>(f.node(), a));
}

FunctionModel truncate(const FunctionModel& a, double eta) {
  if (!(eta > 0.0)) throw PreconditionError("truncate: eta > 0 required");
  return FunctionModel(std::make_shared<TruncateNode>(a.node(), eta));
}

double f0_integrand(double t) {
  if (t <= 0.0) return 0.0;
  return std::sqrt(t) * (0.5 + std::sin(1.0 / t));
}

double finf_integrand(double t) {
  if (t <= 0.0) return 0.0;
  return std::sqrt(t) * (0.5 + std::sin(t));
}

FunctionModel f0_primitive(double table_top) {
  // The default table is shared; building it costs a few thousand panels.
  if (table_top == 64.0) {
    static const auto shared = std::make_shared<F0Node>(64.0);
    return FunctionModel(shared);
  }
  return FunctionModel(std::make_shared<F0Node>(table_top));
}

FunctionModel finf_primitive() {
  static const auto shared = std::make_shared<FinfNode>();
  return FunctionModel(shared);
}

FunctionModel g0_model(double p) {
  if (!(p > 0.0)) throw PreconditionError("G0: p > 0 required");
  return FunctionModel(std::make_shared<G0Node>(p));
}

FunctionModel ginf_model(double p) {
  if (!(p > 0.0)) throw PreconditionError("Ginf: p > 0 required");
  return FunctionModel(std::make_shared<GinfNode>(p));
}

FunctionModel builtin(BuiltinName name, double p) {
  switch (name) {
    case BuiltinName::F0: return f0_primitive();
    case BuiltinName::G0: return g0_model(p);
    case BuiltinName::Finf: return finf_primitive();
    case BuiltinName::Ginf: return ginf_model(p);
  }
  throw ConfigError("unknown built-in model");
}

FunctionModel builtin(const std::string& name, double p) {
  if (name == "F0") return builtin(BuiltinName::F0, p);
  if (name == "G0") return builtin(BuiltinName::G0, p);
  if (name == "Finf") return builtin(BuiltinName::Finf, p);
  if (name == "Ginf") return builtin(BuiltinName::Ginf, p);
  throw ConfigError("unknown model name '" + name + "'");
}

bool lebourg_check(const FunctionModel& f, double a, double b, int samples) {
  if (samples < 2) throw PreconditionError("lebourg_check: samples >= 2 required");
  if (!(a < b)) throw PreconditionError("lebourg_check: a < b required");
  const double fa = f.value(a);
  const double fb = f.value(b);
  const double q = (fb - fa) / (b - a);

  GradInterval hull{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  GradInterval prev{};
  double jump = 0.0;
  const double step = (b - a) / (samples - 1);
  for (int j = 0; j < samples; ++j) {
    const double s = j == samples - 1 ? b : a + j * step;
    const GradInterval g = f.grad(s);
    hull = hull.hull(g);
    if (j > 0) jump = std::max({jump, std::abs(g.lo - prev.lo), std::abs(g.hi - prev.hi)});
    prev = g;
  }
  for (double s : f.breakpoints(a, b)) hull = hull.hull(f.grad(s));

  // Between samples ∂f can move by about one neighbouring jump; the last term
  // covers rounding in the value difference.
  const double tol = jump + 1e-12 * (1.0 + std::abs(q)) +
                     1e-13 * (1.0 + std::abs(fa) + std::abs(fb)) / (b - a);
  return hull.lo - tol <= q && q <= hull.hi + tol;
}

}  // namespace oscincl
