#pragma once

namespace pinnuq::cli {

/// Keeps freed heap blocks in-process. Each training iteration records a tape
/// of large temporaries; with glibc defaults those go back to the kernel via
/// mmap/munmap every iteration and page faults dominate. No-op off glibc.
void configure_allocator() noexcept;

}  // namespace pinnuq::cli
