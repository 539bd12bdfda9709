#pragma once

namespace kaicg {

inline constexpr const char* kToolName = "kaicg";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace kaicg
