#pragma once

namespace bmfmc {

inline constexpr const char* kVersion = "v0.1.0";

}  // namespace bmfmc
