#pragma once

namespace dtwcert {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kProtocolVersion = "1";

}  // namespace dtwcert
