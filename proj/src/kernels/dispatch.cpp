#include <cstdlib>
#include <cstring>
#include <vector>

#include "magescan/kernels.hpp"

namespace magescan::kern {

const Kernels* avx2_kernels_impl();
const Kernels* neon_kernels_impl();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const std::vector<const Kernels*>& usable() {
  static const std::vector<const Kernels*> list = [] {
    std::vector<const Kernels*> v;
    v.push_back(&scalar_kernels());
    if (const Kernels* k = avx2_kernels_impl(); k && cpu_has_avx2()) {
      v.push_back(k);
    }
    if (const Kernels* k = neon_kernels_impl()) {
      v.push_back(k);
    }
    return v;
  }();
  return list;
}

const Kernels* select() {
  if (const char* force = std::getenv("MAGESCAN_KERNELS")) {
    for (const Kernels* k : usable()) {
      if (std::strcmp(k->name, force) == 0) return k;
    }
    // unknown or unsupported name: fall through to auto selection
  }
  return usable().back();  // best available (scalar first, SIMD appended)
}

}  // namespace

const Kernels& active_kernels() {
  static const Kernels* k = select();
  return *k;
}

std::span<const Kernels* const> available_kernels() {
  const auto& v = usable();
  return {v.data(), v.size()};
}

}  // namespace magescan::kern
