#include "oscincl/energy.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "oscincl/errors.hpp"

namespace oscincl {

namespace {

void check_finite_energy(double t) {
  if (!std::isfinite(t)) throw NumericalError("energy is not finite");
}

NodalField clamp_box(const NodalField& u, double eta) { return u.cwiseMax(-eta).cwiseMin(eta); }

// A″(uᵢ) by a central difference of the selected subgradient. The step follows
// the oscillation scale s² of the built-ins near 0.
double curvature(const FunctionModel& a, double s, SubgradientStrategy strategy) {
  if (s <= 0.0) return 0.0;
  const double eps = std::max(1e-7 * std::min(s, s * s), 1e-300);
  const double lo = std::max(s - eps, 0.0);
  const double up = select_subgradient(a.grad(s + eps), strategy);
  const double dn = select_subgradient(a.grad(lo), strategy);
  return (up - dn) / (s + eps - lo);
}

struct Workspace {
  Eigen::SparseMatrix<double> K;
  double spectral = 0.0;
};

// Solve (K + diag(d)) x = rhs with rows in `active` pinned to zero.
// Returns false when the factorization is not positive definite.
bool solve_shifted(const Workspace& ws, const NodalField& diag, const std::vector<char>& active,
                   const NodalField& rhs, NodalField& x) {
  const auto n = ws.K.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(ws.K.nonZeros()));
  for (Eigen::Index col = 0; col < ws.K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(ws.K, col); it; ++it) {
      const auto r = it.row();
      if (active[static_cast<std::size_t>(r)] || active[static_cast<std::size_t>(col)]) continue;
      t.emplace_back(r, col, it.value());
    }
  }
  NodalField b = rhs;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (active[static_cast<std::size_t>(i)]) {
      t.emplace_back(i, i, 1.0);
      b[i] = 0.0;
    } else {
      t.emplace_back(i, i, diag[i]);
    }
  }
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
  if (ldlt.info() != Eigen::Success) return false;
  if (ldlt.vectorD().minCoeff() <= 0.0) return false;
  x = ldlt.solve(b);
  return ldlt.info() == Eigen::Success && x.allFinite();
}

bool direction(const EnergyContext& ctx, const Workspace& ws, DescentMetric metric,
               const NodalField& u, const NodalField& g, const std::vector<char>& active,
               SubgradientStrategy strategy, NodalField& d) {
  const double w = ctx.mesh.weight;
  const auto n = u.size();
  switch (metric) {
    case DescentMetric::Newton: {
      NodalField c(n);
      for (Eigen::Index i = 0; i < n; ++i) c[i] = curvature(ctx.A, u[i], strategy);
      NodalField diag = w * (ctx.k - c.array()).matrix();
      // Indefinite Hessians are left to the nodal sweeps and the Sobolev step.
      if (!solve_shifted(ws, diag, active, -g, d)) return false;
      break;
    }
    case DescentMetric::Sobolev: {
      const NodalField diag = NodalField::Constant(n, w * ctx.k);
      if (!solve_shifted(ws, diag, active, -g, d)) return false;
      break;
    }
    case DescentMetric::Euclidean: {
      d = -g / (ws.spectral + w * ctx.k);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (active[static_cast<std::size_t>(i)]) d[i] = 0.0;
      }
      break;
    }
  }
  return d.allFinite() && g.dot(d) < 0.0;
}

// One Gauss–Seidel sweep of nodal descents. Node i moves along −φ′ of its own
// energy φ(x) = ½(Kᵢᵢ + kw)x² + bx − wA(x) to the first sign change of φ′,
// which is refined by false position. Steps only commit when φ decreases, so the
// sweep never raises T.
int nodal_sweep(const EnergyContext& ctx, const Workspace& ws, NodalField& u, double eta,
                SubgradientStrategy strategy, double skip_below) {
  const double w = ctx.mesh.weight;
  const auto n = u.size();
  int moved = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = 0.0;
    double b = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(ws.K, i); it; ++it) {
      if (it.row() == i) {
        diag = it.value();
      } else {
        b += it.value() * u[it.row()];
      }
    }
    const double a = diag + ctx.k * w;
    const auto dphi = [&](double x) {
      return a * x + b - w * select_subgradient(ctx.A.grad(x), strategy);
    };
    const auto phi = [&](double x) { return 0.5 * a * x * x + b * x - w * ctx.A.value(x); };
    const double x0 = u[i];
    const double g0 = dphi(x0);
    // |g0|/w is the node's share of the inclusion residual.
    if (std::abs(g0) <= skip_below * w) continue;
    const double dir = g0 < 0.0 ? 1.0 : -1.0;
    const double bound = dir * eta;
    // Growing steps from a fraction of the convex-part Newton step.
    const double base = std::abs(g0) / a;
    double step = 1e-3 * base;
    double prev = x0;
    double cur = x0;
    bool bracketed = false;
    for (int k = 0; k < 80; ++k) {
      cur = x0 + dir * step;
      if (dir * (cur - bound) >= 0.0) {
        cur = bound;
        bracketed = dir * dphi(cur) >= 0.0;
        break;
      }
      if (dir * dphi(cur) >= 0.0) {
        bracketed = true;
        break;
      }
      prev = cur;
      step *= 1.5;
    }
    double x = cur;
    if (bracketed) {
      // Illinois false position; bisection whenever the secant point is not
      // strictly inside the bracket.
      double lo = prev;
      double hi = cur;
      double flo = dir * dphi(lo);
      double fhi = dir * dphi(hi);
      const double ftol = 0.01 * skip_below * w;
      int side = 0;
      for (int k = 0; k < 200; ++k) {
        double mid = (flo < 0.0 && fhi > 0.0) ? hi - fhi * (hi - lo) / (fhi - flo) : 0.5 * (lo + hi);
        if (!(dir * (mid - lo) > 0.0 && dir * (hi - mid) > 0.0)) mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = dir * dphi(mid);
        if (fm >= 0.0) {
          hi = mid;
          fhi = fm;
          if (side == 1) flo *= 0.5;
          side = 1;
        } else {
          lo = mid;
          flo = fm;
          if (side == -1) fhi *= 0.5;
          side = -1;
        }
        if (std::abs(fm) <= ftol) break;
      }
      // Kinks inside the final bracket are stationary when the Clarke interval
      // holds (ax + b)/w; pick the candidate with the smallest nodal residual.
      const auto nodal_res = [&](double y) { return ctx.A.grad(y).distance((a * y + b) / w); };
      x = nodal_res(lo) < nodal_res(hi) ? lo : hi;
      const double pad = 1e-9 * std::max(std::abs(lo), std::abs(hi));
      for (double kink : ctx.A.breakpoints(std::min(lo, hi) - pad, std::max(lo, hi) + pad)) {
        if (nodal_res(kink) < nodal_res(x)) x = kink;
      }
    }
    if (x != x0 && phi(x) <= phi(x0)) {
      u[i] = x;
      ++moved;
    }
  }
  return moved;
}

}  // namespace

EnergyContext::EnergyContext(Mesh m, FunctionModel a, double k_) : mesh(std::move(m)), A(std::move(a)), k(k_) {
  if (!(k > 0.0)) throw PreconditionError("EnergyContext: k > 0 required");
}

double select_subgradient(const GradInterval& g, SubgradientStrategy strategy) {
  switch (strategy) {
    case SubgradientStrategy::SmoothPoint:
      if (g.degenerate()) return g.lo;
      if (g.contains(0.0)) return 0.0;
      return g.lo > 0.0 ? g.lo : g.hi;
    case SubgradientStrategy::IntervalMidpoint:
      return g.midpoint();
    case SubgradientStrategy::ZeroIfContainsZero:
      return g.contains(0.0) ? 0.0 : g.midpoint();
  }
  return g.midpoint();
}

double energy(const EnergyContext& ctx, const NodalField& u) {
  const double t = 0.5 * h01_norm_sq(ctx.mesh, u) + 0.5 * ctx.k * l2_norm_sq(ctx.mesh, u) -
                   integrate_composed(ctx.mesh, ctx.A, u);
  check_finite_energy(t);
  return t;
}

NodalField subgradient(const EnergyContext& ctx, const NodalField& u, SubgradientStrategy strategy) {
  NodalField g = apply_stiffness(ctx.mesh, u);
  const double w = ctx.mesh.weight;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    g[i] += w * (ctx.k * u[i] - select_subgradient(ctx.A.grad(u[i]), strategy));
  }
  return g;
}

NodalField gamma_truncate(const NodalField& u, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("gamma_truncate: delta > 0 required");
  return u.cwiseMax(0.0).cwiseMin(delta);
}

double inclusion_residual(const EnergyContext& ctx, const NodalField& u) {
  const NodalField ku = apply_stiffness(ctx.mesh, u);
  const double w = ctx.mesh.weight;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double lhs = ku[i] / w + ctx.k * u[i];
    const double d = ctx.A.grad(u[i]).distance(lhs);
    acc += d * d;
  }
  const double scale = std::max(1.0, linf_norm(ctx.mesh, u));
  return std::sqrt(w * acc) / scale;
}

SolutionRecord make_record(const EnergyContext& ctx, const NodalField& u, double eta) {
  SolutionRecord r;
  r.u = u;
  r.eta = eta;
  r.energy = energy(ctx, u);
  r.linf = linf_norm(ctx.mesh, u);
  r.h01 = std::sqrt(h01_norm_sq(ctx.mesh, u));
  r.l2 = std::sqrt(l2_norm_sq(ctx.mesh, u));
  r.residual = inclusion_residual(ctx, u);
  return r;
}

SolutionRecord descend(const EnergyContext& ctx, double eta, const NodalField& start,
                       const MinimizeOptions& opts) {
  if (!(eta > 0.0)) throw PreconditionError("descend: eta > 0 required");
  if (static_cast<std::size_t>(start.size()) != ctx.mesh.size()) {
    throw PreconditionError("descend: start field does not match the mesh");
  }
  Workspace ws{stiffness_matrix(ctx.mesh), stiffness_spectral_bound(ctx.mesh)};
  NodalField u = clamp_box(start, eta);
  double t_u = energy(ctx, u);
  double res = inclusion_residual(ctx, u);
  const auto n = u.size();
  std::vector<char> active(static_cast<std::size_t>(n));
  std::string diagnostic;
  int it = 0;
  int small_steps = 0;
  constexpr int kSmallStepRun = 10;
  double best_res = res;

  const DescentMetric order[] = {DescentMetric::Newton, DescentMetric::Sobolev,
                                 DescentMetric::Euclidean};
  for (; it < opts.max_iters && res > opts.stop_tol; ++it) {
    NodalField g = subgradient(ctx, u, opts.strategy);
    const double edge = eta * (1.0 - 1e-12);
    for (Eigen::Index i = 0; i < n; ++i) {
      active[static_cast<std::size_t>(i)] = (u[i] >= edge && g[i] < 0.0) || (u[i] <= -edge && g[i] > 0.0);
    }

    const NodalField before = u;
    if (opts.nodal_sweeps) {
      for (int sw = 0; sw < opts.sweeps_per_iter; ++sw) {
        if (nodal_sweep(ctx, ws, u, eta, opts.strategy, 0.1 * opts.stop_tol) == 0) break;
      }
      t_u = energy(ctx, u);
      res = inclusion_residual(ctx, u);
      if (res <= opts.stop_tol) {
        ++it;
        break;
      }
      g = subgradient(ctx, u, opts.strategy);
      for (Eigen::Index i = 0; i < n; ++i) {
        active[static_cast<std::size_t>(i)] = (u[i] >= edge && g[i] < 0.0) || (u[i] <= -edge && g[i] > 0.0);
      }
    }

    bool accepted = false;
    double step_norm = 0.0;
    for (DescentMetric m : order) {
      if (static_cast<int>(m) < static_cast<int>(opts.metric)) continue;
      NodalField d;
      if (!direction(ctx, ws, m, u, g, active, opts.strategy, d)) continue;
      double t = opts.step_init;
      for (int b = 0; b < opts.max_backtracks; ++b, t *= opts.shrink) {
        const NodalField trial = clamp_box(u + t * d, eta);
        const NodalField diff = trial - u;
        if (diff.cwiseAbs().maxCoeff() == 0.0) break;
        const double t_trial = energy(ctx, trial);
        bool ok = t_trial <= t_u + opts.armijo_c * g.dot(diff);
        double res_trial = -1.0;
        if (!ok && t_trial <= t_u) {
          // Near convergence the Armijo decrease drowns in rounding; accept a
          // non-increasing step that improves the residual.
          res_trial = inclusion_residual(ctx, trial);
          ok = res_trial < res;
        }
        if (ok) {
          u = trial;
          step_norm = (u - before).cwiseAbs().maxCoeff();
          t_u = t_trial;
          res = res_trial >= 0.0 ? res_trial : inclusion_residual(ctx, u);
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    if (!accepted) {
      step_norm = (u - before).cwiseAbs().maxCoeff();
      if (step_norm == 0.0) {
        diagnostic = "stalled: no direction passed the line search";
        ++it;
        break;
      }
    }
    // Tiny steps often still shrink the residual; stop on a run of them
    // without a 1% residual improvement.
    const bool improved = res < 0.99 * best_res;
    best_res = std::min(best_res, res);
    if (step_norm <= opts.step_tol * std::max(1.0, linf_norm(ctx.mesh, u)) && res > opts.stop_tol && !improved) {
      if (++small_steps >= kSmallStepRun) {
        diagnostic = "step below tolerance";
        ++it;
        break;
      }
    } else {
      small_steps = 0;
    }
  }
  SolutionRecord r = make_record(ctx, u, eta);
  r.iterations = it;
  r.converged = r.residual <= opts.stop_tol;
  if (!r.converged && diagnostic.empty()) diagnostic = "iteration limit";
  r.diagnostic = diagnostic;
  return r;
}

namespace {

SolutionRecord run_restart(const EnergyContext& ctx, double eta, const NodalField& start,
                           const MinimizeOptions& opts) {
  SolutionRecord rec = descend(ctx, eta, start, opts);
  int total = rec.iterations;
  if (opts.delta) {
    for (int round = 0; round < opts.max_gamma_rounds; ++round) {
      const NodalField v = gamma_truncate(rec.u, *opts.delta);
      if (v == rec.u) break;
      if (energy(ctx, v) > rec.energy) {
        rec.diagnostic += rec.diagnostic.empty() ? "" : "; ";
        rec.diagnostic += "gamma truncation raised the energy";
        break;
      }
      rec = descend(ctx, eta, v, opts);
      total += rec.iterations;
    }
  }
  rec.iterations = total;
  return rec;
}

}  // namespace

SolutionRecord minimize_over_ball(const EnergyContext& ctx, double eta, const MinimizeOptions& opts) {
  if (!(eta > 0.0)) throw PreconditionError("minimize_over_ball: eta > 0 required");
  std::vector<NodalField> starts = opts.restarts;
  if (starts.empty()) starts.push_back(NodalField::Zero(static_cast<Eigen::Index>(ctx.mesh.size())));

  std::vector<SolutionRecord> recs(starts.size());
  if (opts.workers > 1 && starts.size() > 1) {
    std::vector<std::future<SolutionRecord>> jobs;
    std::size_t next = 0;
    while (next < starts.size()) {
      jobs.clear();
      const std::size_t first = next;
      for (; next < starts.size() && next - first < static_cast<std::size_t>(opts.workers); ++next) {
        jobs.push_back(std::async(std::launch::async, run_restart, std::cref(ctx), eta, std::cref(starts[next]),
                                  std::cref(opts)));
      }
      for (std::size_t j = 0; j < jobs.size(); ++j) recs[first + j] = jobs[j].get();
    }
  } else {
    for (std::size_t k = 0; k < starts.size(); ++k) recs[k] = run_restart(ctx, eta, starts[k], opts);
  }

  std::size_t best = 0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    recs[k].restart_index = static_cast<int>(k);
    if (recs[k].energy < recs[best].energy) best = k;
  }
  SolutionRecord rec = std::move(recs[best]);
  if (!rec.converged && opts.polish_iters > 0) {
    MinimizeOptions more = opts;
    more.max_iters = opts.polish_iters;
    SolutionRecord polished = run_restart(ctx, eta, rec.u, more);
    if (polished.energy <= rec.energy) {
      polished.iterations += rec.iterations;
      polished.restart_index = rec.restart_index;
      rec = std::move(polished);
    }
  }
  return rec;
}

}  // namespace oscincl
