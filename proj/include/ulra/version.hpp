#pragma once

namespace ulra {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ulra
