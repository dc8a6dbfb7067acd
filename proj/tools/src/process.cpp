#include "pinnuq/cli/process.hpp"

#include <cstdlib>  // defines __GLIBC__

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pinnuq::cli {

void configure_allocator() noexcept {
#if defined(__GLIBC__)
  // Largest value mallopt accepts for the mmap threshold on 64-bit.
  constexpr int kThreshold = 32 << 20;
  mallopt(M_MMAP_THRESHOLD, kThreshold);
  mallopt(M_TRIM_THRESHOLD, kThreshold);
#endif
}

}  // namespace pinnuq::cli
