#pragma once

#include <cstdint>
#include <string_view>

namespace litege {

// FNV-1a 64-bit; stable content fingerprint for cross-referencing files.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace litege
