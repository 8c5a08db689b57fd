#pragma once

namespace qtransfer {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qtransfer
