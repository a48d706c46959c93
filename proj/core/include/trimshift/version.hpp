#pragma once

namespace trimshift {

inline constexpr const char* kVersion = "0.1.0";

} // namespace trimshift
