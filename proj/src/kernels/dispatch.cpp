#include <cstdlib>

#include "oscincl/kernels.hpp"

namespace oscincl::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table(Backend backend) {
  return backend == Backend::Avx2 ? avx2::kTable : scalar::kTable;
}

Backend active_backend() {
  static const Backend chosen = [] {
    if (std::getenv("OSCINCL_FORCE_SCALAR") != nullptr) return Backend::Scalar;
    return avx2_available() ? Backend::Avx2 : Backend::Scalar;
  }();
  return chosen;
}

const KernelTable& active() { return table(active_backend()); }

const char* backend_name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace oscincl::kernels
