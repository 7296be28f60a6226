#include "oscincl/discretization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <vector>

#include "oscincl/errors.hpp"
#include "oscincl/kernels.hpp"

namespace oscincl {

namespace {

void check_shape(const Mesh& mesh, const NodalField& u, const char* where) {
  if (static_cast<std::size_t>(u.size()) != mesh.size()) {
    throw PreconditionError(std::string(where) + ": field has " + std::to_string(u.size()) +
                            " entries, mesh has " + std::to_string(mesh.size()) + " nodes");
  }
}

// Stencil weights hy/hx and hx/hy of the five-point Laplacian.
std::array<double, 2> stencil_weights(const Mesh& mesh) {
  return {mesh.h[1] / mesh.h[0], mesh.h[0] / mesh.h[1]};
}

}  // namespace

std::array<double, 2> Mesh::coordinate(std::size_t index) const {
  const std::size_t i = index % interior[0];
  const std::size_t j = index / interior[0];
  std::array<double, 2> x{lo[0] + static_cast<double>(i + 1) * h[0], 0.0};
  if (dim == 2) x[1] = lo[1] + static_cast<double>(j + 1) * h[1];
  return x;
}

Mesh build_mesh(int dim, std::array<double, 2> lo, std::array<double, 2> hi, int resolution) {
  if (dim != 1 && dim != 2) {
    throw PreconditionError("build_mesh: dimension " + std::to_string(dim) + " unsupported (1 or 2)");
  }
  if (resolution < 8) throw PreconditionError("build_mesh: resolution >= 8 required");
  Mesh m;
  m.dim = dim;
  m.lo = lo;
  m.hi = hi;
  m.measure = 1.0;
  for (int a = 0; a < 2; ++a) {
    if (a == 1 && dim == 1) {
      m.cells[1] = 1;
      m.h[1] = 1.0;
      m.interior[1] = 1;
      continue;
    }
    if (!(hi[a] > lo[a]) || !std::isfinite(hi[a] - lo[a])) {
      throw PreconditionError("build_mesh: degenerate extent");
    }
    m.cells[a] = resolution;
    m.h[a] = (hi[a] - lo[a]) / resolution;
    m.interior[a] = static_cast<std::size_t>(resolution - 1);
    m.measure *= hi[a] - lo[a];
  }
  m.weight = dim == 1 ? m.h[0] : m.h[0] * m.h[1];
  return m;
}

Mesh build_mesh_1d(double a, double b, int resolution) {
  return build_mesh(1, {a, 0.0}, {b, 1.0}, resolution);
}

Mesh build_mesh_2d(std::array<double, 2> lo, std::array<double, 2> hi, int resolution) {
  return build_mesh(2, lo, hi, resolution);
}

void apply_stiffness(const Mesh& mesh, const NodalField& u, NodalField& out) {
  check_shape(mesh, u, "apply_stiffness");
  out.resize(u.size());
  const auto& k = kernels::active();
  if (mesh.dim == 1) {
    k.stencil_1d(u.data(), out.data(), mesh.size(), 1.0 / mesh.h[0]);
  } else {
    const auto w = stencil_weights(mesh);
    k.stencil_2d(u.data(), out.data(), mesh.interior[0], mesh.interior[1], w[0], w[1]);
  }
}

NodalField apply_stiffness(const Mesh& mesh, const NodalField& u) {
  NodalField out;
  apply_stiffness(mesh, u, out);
  return out;
}

Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) * (mesh.dim == 1 ? 3 : 5));
  const auto nx = static_cast<Eigen::Index>(mesh.interior[0]);
  const auto ny = static_cast<Eigen::Index>(mesh.interior[1]);
  const double wx = mesh.dim == 1 ? 1.0 / mesh.h[0] : stencil_weights(mesh)[0];
  const double wy = mesh.dim == 1 ? 0.0 : stencil_weights(mesh)[1];
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const Eigen::Index p = j * nx + i;
      t.emplace_back(p, p, 2.0 * wx + 2.0 * wy);
      if (i > 0) t.emplace_back(p, p - 1, -wx);
      if (i + 1 < nx) t.emplace_back(p, p + 1, -wx);
      if (mesh.dim == 2) {
        if (j > 0) t.emplace_back(p, p - nx, -wy);
        if (j + 1 < ny) t.emplace_back(p, p + nx, -wy);
      }
    }
  }
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

double stiffness_spectral_bound(const Mesh& mesh) {
  if (mesh.dim == 1) return 4.0 / mesh.h[0];
  const auto w = stencil_weights(mesh);
  return 4.0 * (w[0] + w[1]);
}

double h01_norm_sq(const Mesh& mesh, const NodalField& u) {
  check_shape(mesh, u, "h01_norm_sq");
  const auto& k = kernels::active();
  if (mesh.dim == 1) return k.dirichlet_1d(u.data(), mesh.size(), 1.0 / mesh.h[0]);
  const auto w = stencil_weights(mesh);
  return k.dirichlet_2d(u.data(), mesh.interior[0], mesh.interior[1], w[0], w[1]);
}

double l2_norm_sq(const Mesh& mesh, const NodalField& u) {
  check_shape(mesh, u, "l2_norm_sq");
  // Same summation as integrate_composed, so A(s) = s² reproduces it exactly.
  const NodalField sq = u.cwiseProduct(u);
  return mesh.weight * kernels::active().sum(sq.data(), mesh.size());
}

double weighted_dot(const Mesh& mesh, const NodalField& a, const NodalField& b) {
  check_shape(mesh, a, "weighted_dot");
  check_shape(mesh, b, "weighted_dot");
  return mesh.weight * kernels::active().dot(a.data(), b.data(), mesh.size());
}

double linf_norm(const Mesh& mesh, const NodalField& u) {
  check_shape(mesh, u, "linf_norm");
  return u.size() == 0 ? 0.0 : u.cwiseAbs().maxCoeff();
}

double integrate_composed(const Mesh& mesh, const FunctionModel& a, const NodalField& u) {
  check_shape(mesh, u, "integrate_composed");
  NodalField values(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) values[i] = a.value(u[i]);
  return mesh.weight * kernels::active().sum(values.data(), mesh.size());
}

double unit_ball_volume(int n) {
  if (n == 1) return 2.0;
  if (n == 2) return std::numbers::pi;
  throw PreconditionError("unit_ball_volume: n must be 1 or 2");
}

double bump_constant(double r, int n) {
  return 4.0 * std::pow(r, n - 2) * (1.0 - std::pow(2.0, -n)) * unit_ball_volume(n);
}

BumpGeometry make_bump_geometry(int dim, std::array<double, 2> x0, double r) {
  if (!(r > 0.0)) throw PreconditionError("bump geometry: r > 0 required");
  BumpGeometry g;
  g.dim = dim;
  g.x0 = x0;
  g.r = r;
  g.omega_n = unit_ball_volume(dim);
  g.Crn = bump_constant(r, dim);
  return g;
}

BumpGeometry default_bump_geometry(const Mesh& mesh) {
  std::array<double, 2> x0{0.5 * (mesh.lo[0] + mesh.hi[0]), 0.0};
  double side = mesh.hi[0] - mesh.lo[0];
  if (mesh.dim == 2) {
    x0[1] = 0.5 * (mesh.lo[1] + mesh.hi[1]);
    side = std::min(side, mesh.hi[1] - mesh.lo[1]);
  }
  return make_bump_geometry(mesh.dim, x0, 0.45 * side);
}

NodalField bump(const Mesh& mesh, const BumpGeometry& geom, double s) {
  if (geom.dim != mesh.dim) throw PreconditionError("bump: geometry dimension differs from mesh");
  const double slack = 1e-12 * geom.r;
  for (int a = 0; a < mesh.dim; ++a) {
    if (geom.x0[a] - geom.r < mesh.lo[a] - slack || geom.x0[a] + geom.r > mesh.hi[a] + slack) {
      throw PreconditionError("bump: ball B(x0, r) exceeds the domain");
    }
  }
  NodalField u(static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t p = 0; p < mesh.size(); ++p) {
    const auto x = mesh.coordinate(p);
    const double dx = x[0] - geom.x0[0];
    const double dy = mesh.dim == 2 ? x[1] - geom.x0[1] : 0.0;
    const double d = std::sqrt(dx * dx + dy * dy);
    double v = 0.0;
    if (d <= 0.5 * geom.r) {
      v = s;
    } else if (d < geom.r) {
      v = 2.0 * s / geom.r * (geom.r - d);
    }
    u[static_cast<Eigen::Index>(p)] = v;
  }
  return u;
}

void write_nodal_csv(std::ostream& os, const Mesh& mesh, const NodalField& u) {
  check_shape(mesh, u, "write_nodal_csv");
  os << (mesh.dim == 1 ? "x,value\n" : "x,y,value\n");
  char buf[128];
  for (std::size_t p = 0; p < mesh.size(); ++p) {
    const auto x = mesh.coordinate(p);
    const double v = u[static_cast<Eigen::Index>(p)];
    if (mesh.dim == 1) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x[0], v);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[0], x[1], v);
    }
    os << buf;
  }
}

void write_nodal_csv(const std::string& path, const Mesh& mesh, const NodalField& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_nodal_csv(os, mesh, u);
  if (!os) throw Error("write failed: " + path);
}

}  // namespace oscincl
