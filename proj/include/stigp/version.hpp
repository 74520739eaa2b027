#pragma once

namespace stigp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stigp
