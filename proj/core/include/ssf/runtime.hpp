#pragma once

namespace ssf {

/// Keeps large temporaries on the heap instead of fresh mmap regions. The
/// fitters allocate and free multi-megabyte matrices every batch, which
/// otherwise costs more in page faults than in arithmetic. No-op outside
/// glibc; call once at program start.
void configure_allocator() noexcept;

}  // namespace ssf
