#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace remask {

// FNV-1a 64-bit. Used for config identity in artifact file names and for
// the determinism check over emitted artifacts. Not cryptographic.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return s;
}

}  // namespace remask
