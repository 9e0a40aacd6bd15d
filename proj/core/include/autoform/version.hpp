#pragma once

namespace autoform {

inline constexpr const char* kVersion = "0.1.0";

} // namespace autoform
