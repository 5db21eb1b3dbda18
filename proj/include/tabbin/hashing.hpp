#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tabbin {

// FNV-1a 64-bit. Provenance fingerprints only, not cryptographic.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

// Hash of a file's contents. Throws ValidationError if the file is missing.
std::uint64_t hash_file(const std::string& path);

std::string hash_to_hex(std::uint64_t h);

}  // namespace tabbin
