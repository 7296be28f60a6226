#include "oscincl/kernels.hpp"

namespace oscincl::kernels::scalar {

namespace {

void stencil_1d(const double* u, double* out, std::size_t n, double inv_h) {
  for (std::size_t i = 0; i < n; ++i) {
    const double west = i > 0 ? u[i - 1] : 0.0;
    const double east = i + 1 < n ? u[i + 1] : 0.0;
    out[i] = ((2.0 * u[i] - west) - east) * inv_h;
  }
}

void stencil_2d(const double* u, double* out, std::size_t nx, std::size_t ny, double wx,
                double wy) {
  for (std::size_t j = 0; j < ny; ++j) {
    const double* row = u + j * nx;
    const double* south = j > 0 ? row - nx : nullptr;
    const double* north = j + 1 < ny ? row + nx : nullptr;
    for (std::size_t i = 0; i < nx; ++i) {
      const double c2 = 2.0 * row[i];
      const double west = i > 0 ? row[i - 1] : 0.0;
      const double east = i + 1 < nx ? row[i + 1] : 0.0;
      const double s = south ? south[i] : 0.0;
      const double nn = north ? north[i] : 0.0;
      out[j * nx + i] = wx * ((c2 - west) - east) + wy * ((c2 - s) - nn);
    }
  }
}

double dirichlet_1d(const double* u, std::size_t n, double inv_h) {
  if (n == 0) return 0.0;
  double acc = u[0] * u[0] + u[n - 1] * u[n - 1];
  for (std::size_t i = 1; i < n; ++i) {
    const double d = u[i] - u[i - 1];
    acc += d * d;
  }
  return acc * inv_h;
}

double dirichlet_2d(const double* u, std::size_t nx, std::size_t ny, double wx, double wy) {
  double ax = 0.0;
  double ay = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    const double* row = u + j * nx;
    ax += row[0] * row[0] + row[nx - 1] * row[nx - 1];
    for (std::size_t i = 1; i < nx; ++i) {
      const double d = row[i] - row[i - 1];
      ax += d * d;
    }
  }
  for (std::size_t i = 0; i < nx; ++i) {
    ay += u[i] * u[i];
    const double top = u[(ny - 1) * nx + i];
    ay += top * top;
  }
  for (std::size_t j = 1; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double d = u[j * nx + i] - u[(j - 1) * nx + i];
      ay += d * d;
    }
  }
  return wx * ax + wy * ay;
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

}  // namespace

const KernelTable kTable{&stencil_1d, &stencil_2d, &dirichlet_1d, &dirichlet_2d, &dot, &sum};

}  // namespace oscincl::kernels::scalar
