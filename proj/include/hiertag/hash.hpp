#pragma once

#include <cstdint>
#include <string_view>

namespace hiertag {

// FNV-1a, 64-bit. Used for hierarchy fingerprints and config hashes; stable
// across platforms so manifests stay comparable.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace hiertag
