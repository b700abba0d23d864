#pragma once

namespace robustnn {

inline constexpr const char* kVersion = "robustnn 0.1.0";

}  // namespace robustnn
