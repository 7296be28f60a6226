#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oscincl/discretization.hpp"
#include "oscincl/errors.hpp"
#include "oscincl/function_model.hpp"
#include "oscincl/kernels.hpp"

using namespace oscincl;
using std::numbers::pi;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

NodalField sine_mode(const Mesh& mesh) {
  NodalField u(static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto x = mesh.coordinate(i);
    u[static_cast<Eigen::Index>(i)] = std::sin(pi * x[0]);
  }
  return u;
}

}  // namespace

TEST_CASE("1D mesh layout") {
  const Mesh m = build_mesh_1d(0.0, 1.0, 8);
  CHECK(m.size() == 7);
  CHECK(m.h[0] == doctest::Approx(0.125));
  CHECK(m.weight == doctest::Approx(0.125));
  CHECK(m.measure == doctest::Approx(1.0));
  CHECK(m.coordinate(0)[0] == doctest::Approx(0.125));
  CHECK(m.coordinate(6)[0] == doctest::Approx(0.875));
  CHECK_THROWS_AS(build_mesh_1d(0.0, 1.0, 4), PreconditionError);
  CHECK_THROWS_AS(build_mesh_1d(1.0, 0.0, 16), PreconditionError);
}

TEST_CASE("discrete sine mode has the closed-form Dirichlet energy") {
  for (int N : {8, 64, 2048}) {
    const Mesh m = build_mesh_1d(0.0, 1.0, N);
    const NodalField u = sine_mode(m);
    const double s = std::sin(pi / (2.0 * N));
    CHECK(h01_norm_sq(m, u) == doctest::Approx(2.0 * N * N * s * s).epsilon(1e-12));
    CHECK(l2_norm_sq(m, u) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(linf_norm(m, u) <= 1.0);
  }
}

TEST_CASE("stiffness apply matches the assembled matrix") {
  std::mt19937_64 rng(7);
  for (int dim : {1, 2}) {
    const Mesh m = build_mesh(dim, {0.0, 0.0}, {2.0, 1.0}, 24);
    const auto v = random_vec(m.size(), rng);
    const NodalField u = Eigen::Map<const NodalField>(v.data(), static_cast<Eigen::Index>(v.size()));
    const NodalField a = apply_stiffness(m, u);
    const NodalField b = stiffness_matrix(m) * u;
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + b.lpNorm<Eigen::Infinity>()));
    CHECK(u.dot(a) == doctest::Approx(h01_norm_sq(m, u)).epsilon(1e-12));
    CHECK(stiffness_spectral_bound(m) * u.squaredNorm() >= u.dot(a));
  }
}

TEST_CASE("bump constant and 1D bump norm") {
  CHECK(bump_constant(0.25, 2) == doctest::Approx(3.0 * pi));
  CHECK(bump_constant(0.5, 1) == doctest::Approx(8.0));
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(pi));
  // Nodes fall on the kinks, so the piecewise-linear interpolant is exact.
  const Mesh m = build_mesh_1d(0.0, 1.0, 1024);
  const BumpGeometry g = make_bump_geometry(1, {0.5, 0.5}, 0.25);
  const NodalField w = bump(m, g, 2.0);
  CHECK(linf_norm(m, w) == doctest::Approx(2.0));
  CHECK(h01_norm_sq(m, w) == doctest::Approx(4.0 * bump_constant(0.25, 1)).epsilon(1e-12));
  CHECK(w.minCoeff() >= 0.0);
}

TEST_CASE("2D bump norm converges to 3 pi") {
  const BumpGeometry g = make_bump_geometry(2, {0.5, 0.5}, 0.25);
  const double exact = 3.0 * pi;
  const Mesh coarse = build_mesh_2d({0.0, 0.0}, {1.0, 1.0}, 128);
  const Mesh fine = build_mesh_2d({0.0, 0.0}, {1.0, 1.0}, 256);
  const double e_coarse = std::abs(h01_norm_sq(coarse, bump(coarse, g, 1.0)) - exact);
  const double e_fine = std::abs(h01_norm_sq(fine, bump(fine, g, 1.0)) - exact);
  CHECK(e_fine / exact < 0.02);
  CHECK(e_fine <= 0.5 * e_coarse);
}

TEST_CASE("bump geometry must stay inside the domain") {
  const Mesh m = build_mesh_1d(0.0, 1.0, 64);
  CHECK_THROWS_AS(bump(m, make_bump_geometry(1, {0.1, 0.5}, 0.25), 1.0), PreconditionError);
  const BumpGeometry d = default_bump_geometry(m);
  CHECK(d.x0[0] == doctest::Approx(0.5));
  CHECK(d.r == doctest::Approx(0.45));
}

TEST_CASE("integrate_composed and weighted_dot") {
  const Mesh m = build_mesh_1d(0.0, 2.0, 64);
  NodalField u = NodalField::Constant(static_cast<Eigen::Index>(m.size()), 0.5);
  // A(s) = s² on s >= 0
  CHECK(integrate_composed(m, add_quadratic(zero_model(), 2.0), u) == doctest::Approx(l2_norm_sq(m, u)));
  CHECK(weighted_dot(m, u, u) == doctest::Approx(l2_norm_sq(m, u)));
  // zero extension below 0
  CHECK(integrate_composed(m, add_quadratic(zero_model(), 2.0), -u) == 0.0);
}

TEST_CASE("nodal CSV has one row per interior node") {
  const Mesh m = build_mesh_2d({0.0, 0.0}, {1.0, 1.0}, 8);
  std::ostringstream os;
  write_nodal_csv(os, m, NodalField::Zero(static_cast<Eigen::Index>(m.size())));
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(m.size()) + 1);
}

TEST_CASE("AVX2 kernels agree with the scalar kernels") {
  if (!kernels::avx2_available()) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  const auto& s = kernels::table(kernels::Backend::Scalar);
  const auto& v = kernels::table(kernels::Backend::Avx2);
  std::mt19937_64 rng(42);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 100u, 1023u, 2047u}) {
    const auto u = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    std::vector<double> o1(n), o2(n);
    s.stencil_1d(u.data(), o1.data(), n, 3.5);
    v.stencil_1d(u.data(), o2.data(), n, 3.5);
    CHECK(o1 == o2);
    const double d1 = s.dirichlet_1d(u.data(), n, 3.5);
    CHECK(v.dirichlet_1d(u.data(), n, 3.5) == doctest::Approx(d1).epsilon(1e-13));
    const double dt = s.dot(u.data(), b.data(), n);
    CHECK(std::abs(v.dot(u.data(), b.data(), n) - dt) <= 1e-13 * static_cast<double>(n));
    const double sm = s.sum(u.data(), n);
    CHECK(std::abs(v.sum(u.data(), n) - sm) <= 1e-13 * static_cast<double>(n));
  }
  for (auto [nx, ny] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 2}, {4, 4}, {5, 7}, {17, 9}, {127, 127}}) {
    const auto u = random_vec(nx * ny, rng);
    std::vector<double> o1(nx * ny), o2(nx * ny);
    s.stencil_2d(u.data(), o1.data(), nx, ny, 1.25, 0.8);
    v.stencil_2d(u.data(), o2.data(), nx, ny, 1.25, 0.8);
    CHECK(o1 == o2);
    const double d1 = s.dirichlet_2d(u.data(), nx, ny, 1.25, 0.8);
    CHECK(v.dirichlet_2d(u.data(), nx, ny, 1.25, 0.8) == doctest::Approx(d1).epsilon(1e-13));
  }
}

TEST_CASE("active backend reports a known name") {
  const std::string name = kernels::backend_name(kernels::active_backend());
  CHECK((name == "scalar" || name == "avx2"));
}
