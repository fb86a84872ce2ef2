#include <cstdlib>
#include <string_view>

#include "mspi/kernels.hpp"

namespace mspi::kernels {

#ifndef MSPI_HAVE_AVX2
const KernelSet* avx2_kernels() { return nullptr; }
#endif

#ifndef MSPI_HAVE_NEON
const KernelSet* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelSet& select_kernels() {
  if (const char* env = std::getenv("MSPI_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return scalar_kernels();
  }
  if (const KernelSet* k = avx2_kernels()) return *k;
  if (const KernelSet* k = neon_kernels()) return *k;
  return scalar_kernels();
}

}  // namespace

const KernelSet& active_kernels() {
  static const KernelSet& selected = select_kernels();
  return selected;
}

}  // namespace mspi::kernels
