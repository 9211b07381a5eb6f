#pragma once

namespace cleanet {

inline constexpr const char* kVersion = "0.1.0";

} // namespace cleanet
