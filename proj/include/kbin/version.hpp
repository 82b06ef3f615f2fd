#pragma once

namespace kbin {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFormatVersionKbpf = 1;
inline constexpr int kFormatVersionKbem = 1;
inline constexpr int kFormatVersionKbnl = 1;

}  // namespace kbin
