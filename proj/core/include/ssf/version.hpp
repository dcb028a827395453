#pragma once

namespace ssf {

/// Semantic version of the library.
const char* version() noexcept;

/// Version plus the source revision the library was built from, e.g.
/// "0.3.0+1a2b3c4"; recorded in every bench manifest.
const char* build_id() noexcept;

}  // namespace ssf
