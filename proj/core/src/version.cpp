#include "ssf/version.hpp"

#ifndef SSFKIT_VERSION
#define SSFKIT_VERSION "0.0.0"
#endif
#ifndef SSFKIT_REVISION
#define SSFKIT_REVISION "unknown"
#endif

namespace ssf {

const char* version() noexcept { return SSFKIT_VERSION; }

const char* build_id() noexcept { return SSFKIT_VERSION "+" SSFKIT_REVISION; }

}  // namespace ssf
