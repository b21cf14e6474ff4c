#pragma once

namespace tinysched {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tinysched
