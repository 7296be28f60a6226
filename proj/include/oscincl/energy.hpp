#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oscincl/discretization.hpp"
#include "oscincl/function_model.hpp"

namespace oscincl {

/// T(u) = ½‖u‖²_{H¹₀} + (k/2)∫u² − ∫A(u) on a mesh.
struct EnergyContext {
  EnergyContext(Mesh mesh, FunctionModel A, double k);

  Mesh mesh;
  FunctionModel A;
  double k;
};

enum class SubgradientStrategy {
  SmoothPoint,        // derivative where smooth; 0 if the interval holds 0, else the endpoint nearest 0
  IntervalMidpoint,   // midpoint of the interval
  ZeroIfContainsZero  // 0 if the interval holds 0, else the midpoint
};

/// Search direction used by the descent. Newton falls back to the others
/// when its direction fails the line search.
enum class DescentMetric { Newton, Sobolev, Euclidean };

struct SolutionRecord {
  NodalField u;
  double eta = 0.0;
  double energy = 0.0;
  double linf = 0.0;
  double h01 = 0.0;  // ‖u‖_{H¹₀}
  double l2 = 0.0;   // ‖u‖_{L²}
  double residual = 0.0;
  int iterations = 0;
  std::string case_id;
  bool converged = false;
  int restart_index = -1;
  std::string diagnostic;
};

struct MinimizeOptions {
  int max_iters = 400;
  double step_init = 1.0;  // initial step along the chosen direction
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 50;
  double step_tol = 1e-10;  // relative to max(1, ‖u‖∞)
  double stop_tol = 1e-7;   // inclusion residual
  std::vector<NodalField> restarts;
  SubgradientStrategy strategy = SubgradientStrategy::SmoothPoint;
  DescentMetric metric = DescentMetric::Newton;
  bool nodal_sweeps = true;     // Gauss–Seidel nodal descents before each step
  int sweeps_per_iter = 3;      // repeated until a sweep moves no node
  std::optional<double> delta;  // γ level applied after each descent
  int max_gamma_rounds = 8;
  int workers = 1;  // restarts run concurrently when > 1
  int polish_iters = 2000;  // extra budget for the best record when it has not converged
};

double select_subgradient(const GradInterval& g, SubgradientStrategy strategy);

double energy(const EnergyContext& ctx, const NodalField& u);

/// Ku + kMu − M ξ(u), the nodal gradient of T with the selected ξ.
NodalField subgradient(const EnergyContext& ctx, const NodalField& u,
                       SubgradientStrategy strategy = SubgradientStrategy::SmoothPoint);

/// min(max(u, 0), δ) nodewise.
NodalField gamma_truncate(const NodalField& u, double delta);

/// Weighted L² norm of the nodal distances from (Ku + kMu)ᵢ/wᵢ to ∂A(uᵢ),
/// divided by max(1, ‖u‖∞).
double inclusion_residual(const EnergyContext& ctx, const NodalField& u);

/// Record for a given field: norms, energy, residual.
SolutionRecord make_record(const EnergyContext& ctx, const NodalField& u, double eta);

/// One projected descent run from `start` (projected onto [−η, η]).
SolutionRecord descend(const EnergyContext& ctx, double eta, const NodalField& start,
                       const MinimizeOptions& opts);

/// Multi-start minimization of T over W^η = {‖u‖∞ ≤ η}, with γ-truncation at
/// opts.delta between descents. Returns the lowest-energy record.
SolutionRecord minimize_over_ball(const EnergyContext& ctx, double eta, const MinimizeOptions& opts);

}  // namespace oscincl
