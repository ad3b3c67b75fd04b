#pragma once

namespace kgsc {

inline constexpr const char* kToolName = "kgsc";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace kgsc
