#pragma once

#include <string>

#ifndef STRUKT_BUILD_HASH
#define STRUKT_BUILD_HASH "unknown"
#endif

namespace strukt {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kBuildHash = STRUKT_BUILD_HASH;

// Identifier recorded in extraction results and digital objects.
inline std::string implementation_id() {
    return std::string("strukt ") + kVersion + "+" + kBuildHash;
}

} // namespace strukt
