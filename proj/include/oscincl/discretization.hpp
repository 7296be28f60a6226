#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <iosfwd>
#include <string>

#include "oscincl/function_model.hpp"

namespace oscincl {

/// Values at interior nodes, x index fastest. Boundary values are zero.
using NodalField = Eigen::VectorXd;

/// Uniform grid on a box with homogeneous Dirichlet boundary.
struct Mesh {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<int, 2> cells{8, 1};     // cells per axis
  std::array<double, 2> h{0.125, 1.0};
  std::array<std::size_t, 2> interior{7, 1};
  double weight = 0.125;   // nodal quadrature weight (h or hx·hy)
  double measure = 1.0;    // analytic m(Ω)

  std::size_t size() const { return interior[0] * interior[1]; }
  std::array<double, 2> coordinate(std::size_t index) const;
};

/// dim ∈ {1, 2}; extent given as lo/hi per axis (y ignored for dim 1);
/// `resolution` cells per axis, at least 8.
Mesh build_mesh(int dim, std::array<double, 2> lo, std::array<double, 2> hi, int resolution);
Mesh build_mesh_1d(double a, double b, int resolution);
Mesh build_mesh_2d(std::array<double, 2> lo, std::array<double, 2> hi, int resolution);

/// (Ku)_i: the scaled stencil, so that uᵀKu is the discrete Dirichlet form.
void apply_stiffness(const Mesh& mesh, const NodalField& u, NodalField& out);
NodalField apply_stiffness(const Mesh& mesh, const NodalField& u);
Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh);
/// Largest eigenvalue bound of K (Gershgorin).
double stiffness_spectral_bound(const Mesh& mesh);

double h01_norm_sq(const Mesh& mesh, const NodalField& u);
double l2_norm_sq(const Mesh& mesh, const NodalField& u);
double linf_norm(const Mesh& mesh, const NodalField& u);
/// Σ wᵢ A(uᵢ).
double integrate_composed(const Mesh& mesh, const FunctionModel& a, const NodalField& u);
double weighted_dot(const Mesh& mesh, const NodalField& a, const NodalField& b);

struct BumpGeometry {
  std::array<double, 2> x0{0.5, 0.5};
  double r = 0.25;
  double Crn = 0.0;
  double omega_n = 0.0;
  int dim = 1;
};

/// Volume of the unit ball in ℝⁿ, n ∈ {1, 2}.
double unit_ball_volume(int n);
/// C(r,n) = 4r^{n−2}(1−2^{−n})ω_n.
double bump_constant(double r, int n);
BumpGeometry make_bump_geometry(int dim, std::array<double, 2> x0, double r);
/// Centred bump with r = 0.45 of the shortest side.
BumpGeometry default_bump_geometry(const Mesh& mesh);

/// Nodal interpolation of w_s: s on B(x0, r/2), linear ramp to 0 on the annulus.
NodalField bump(const Mesh& mesh, const BumpGeometry& geom, double s);

/// CSV "x,value" (1D) or "x,y,value" (2D), one row per interior node.
void write_nodal_csv(std::ostream& os, const Mesh& mesh, const NodalField& u);
void write_nodal_csv(const std::string& path, const Mesh& mesh, const NodalField& u);

}  // namespace oscincl
