#pragma once

namespace msgate {

inline constexpr const char* version = "1.0.0";

}  // namespace msgate
