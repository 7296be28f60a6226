#include <immintrin.h>

#include "oscincl/kernels.hpp"

// Built with -mavx2 -mfma -ffp-contract=off. The stencils use plain mul/sub so
// they match the scalar reference bit for bit; reductions use FMA and four
// accumulators, which changes rounding only.

namespace oscincl::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double stencil_point_1d(const double* u, std::size_t i, std::size_t n, double inv_h) {
  const double west = i > 0 ? u[i - 1] : 0.0;
  const double east = i + 1 < n ? u[i + 1] : 0.0;
  return ((2.0 * u[i] - west) - east) * inv_h;
}

void stencil_1d(const double* u, double* out, std::size_t n, double inv_h) {
  if (n == 0) return;
  out[0] = stencil_point_1d(u, 0, n, inv_h);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d scale = _mm256_set1_pd(inv_h);
  std::size_t i = 1;
  for (; i + kLanes < n; i += kLanes) {
    const __m256d c = _mm256_loadu_pd(u + i);
    const __m256d w = _mm256_loadu_pd(u + i - 1);
    const __m256d e = _mm256_loadu_pd(u + i + 1);
    const __m256d r = _mm256_sub_pd(_mm256_sub_pd(_mm256_mul_pd(two, c), w), e);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(r, scale));
  }
  for (; i < n; ++i) out[i] = stencil_point_1d(u, i, n, inv_h);
}

inline double stencil_point_2d(const double* row, const double* south, const double* north,
                               std::size_t i, std::size_t nx, double wx, double wy) {
  const double c2 = 2.0 * row[i];
  const double west = i > 0 ? row[i - 1] : 0.0;
  const double east = i + 1 < nx ? row[i + 1] : 0.0;
  const double s = south ? south[i] : 0.0;
  const double nn = north ? north[i] : 0.0;
  return wx * ((c2 - west) - east) + wy * ((c2 - s) - nn);
}

void stencil_2d(const double* u, double* out, std::size_t nx, std::size_t ny, double wx,
                double wy) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d vwx = _mm256_set1_pd(wx);
  const __m256d vwy = _mm256_set1_pd(wy);
  const __m256d zero = _mm256_setzero_pd();
  for (std::size_t j = 0; j < ny; ++j) {
    const double* row = u + j * nx;
    const double* south = j > 0 ? row - nx : nullptr;
    const double* north = j + 1 < ny ? row + nx : nullptr;
    double* dst = out + j * nx;
    dst[0] = stencil_point_2d(row, south, north, 0, nx, wx, wy);
    std::size_t i = 1;
    for (; i + kLanes < nx; i += kLanes) {
      const __m256d c2 = _mm256_mul_pd(two, _mm256_loadu_pd(row + i));
      const __m256d w = _mm256_loadu_pd(row + i - 1);
      const __m256d e = _mm256_loadu_pd(row + i + 1);
      const __m256d s = south ? _mm256_loadu_pd(south + i) : zero;
      const __m256d nn = north ? _mm256_loadu_pd(north + i) : zero;
      const __m256d hx = _mm256_mul_pd(vwx, _mm256_sub_pd(_mm256_sub_pd(c2, w), e));
      const __m256d hy = _mm256_mul_pd(vwy, _mm256_sub_pd(_mm256_sub_pd(c2, s), nn));
      _mm256_storeu_pd(dst + i, _mm256_add_pd(hx, hy));
    }
    for (; i < nx; ++i) dst[i] = stencil_point_2d(row, south, north, i, nx, wx, wy);
  }
}

// Σ_{i=1}^{n-1} (a_i − b_i)² with a = u + 1, b = u.
double diff_sq(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(a + i + kLanes), _mm256_loadu_pd(b + i + kLanes));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double dirichlet_1d(const double* u, std::size_t n, double inv_h) {
  if (n == 0) return 0.0;
  const double acc = u[0] * u[0] + u[n - 1] * u[n - 1] + diff_sq(u + 1, u, n - 1);
  return acc * inv_h;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 * kLanes <= n; i += 4 * kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dirichlet_2d(const double* u, std::size_t nx, std::size_t ny, double wx, double wy) {
  double ax = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    const double* row = u + j * nx;
    ax += row[0] * row[0] + row[nx - 1] * row[nx - 1] + diff_sq(row + 1, row, nx - 1);
  }
  const double* top = u + (ny - 1) * nx;
  double ay = dot(u, u, nx) + dot(top, top, nx);
  ay += diff_sq(u + nx, u, (ny - 1) * nx);
  return wx * ax + wy * ay;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_add_pd(_mm256_loadu_pd(a + i), acc0);
    acc1 = _mm256_add_pd(_mm256_loadu_pd(a + i + kLanes), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

}  // namespace

const KernelTable kTable{&stencil_1d, &stencil_2d, &dirichlet_1d, &dirichlet_2d, &dot, &sum};

}  // namespace oscincl::kernels::avx2
