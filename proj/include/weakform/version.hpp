#pragma once

namespace weakform {

inline constexpr const char* version = "0.1.0";

}  // namespace weakform
