#pragma once

#include <cstddef>
#include <cstdint>

namespace nfad {

// IEEE 802.3 reflected polynomial.
inline std::uint32_t crc32_bytes(const unsigned char* p, std::size_t n) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= p[i];
    for (int b = 0; b < 8; ++b)
      crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return crc ^ 0xFFFFFFFFu;
}

}  // namespace nfad
