#pragma once

#include <cstddef>

namespace oscincl::kernels {

enum class Backend { Scalar, Avx2 };

// Grid layout: interior nodes only, x index fastest. Boundary values are zero.
struct KernelTable {
  // out_i = (2u_i − u_{i−1} − u_{i+1}) · inv_h
  void (*stencil_1d)(const double* u, double* out, std::size_t n, double inv_h);
  // out = wx·(2u − west − east) + wy·(2u − south − north)
  void (*stencil_2d)(const double* u, double* out, std::size_t nx, std::size_t ny, double wx,
                     double wy);
  // Σ over all edges (boundary edges included) of squared differences.
  double (*dirichlet_1d)(const double* u, std::size_t n, double inv_h);
  double (*dirichlet_2d)(const double* u, std::size_t nx, std::size_t ny, double wx, double wy);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
};

const KernelTable& table(Backend backend);

/// AVX2+FMA when the CPU reports both and OSCINCL_FORCE_SCALAR is unset.
Backend active_backend();
const KernelTable& active();

bool avx2_available();
const char* backend_name(Backend backend);

namespace scalar {
extern const KernelTable kTable;
}
namespace avx2 {
extern const KernelTable kTable;
}

}  // namespace oscincl::kernels
