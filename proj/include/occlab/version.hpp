#pragma once

namespace occlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace occlab
