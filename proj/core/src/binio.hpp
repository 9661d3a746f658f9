#pragma once

// Little-endian scalar IO shared by the binary file formats (checkpoints,
// node embeddings, scenario sample blocks). Internal to the library.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace gada::binio {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void put_f64(std::ostream& os, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline bool get_u32(std::istream& is, std::uint32_t& out) {
  char b[4];
  if (!is.read(b, 4)) return false;
  out = 0;
  for (int i = 0; i < 4; ++i)
    out |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i]))
           << (8 * i);
  return true;
}

inline bool get_f64(std::istream& is, double& out) {
  char b[8];
  if (!is.read(b, 8)) return false;
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i]))
         << (8 * i);
  out = std::bit_cast<double>(v);
  return true;
}

}  // namespace gada::binio
