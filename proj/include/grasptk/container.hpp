#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grasptk/errors.hpp"

namespace grasptk {

// Binary tensor container ("GMTC"). Layout, all integers little-endian:
//
//   magic   "GMTC"                      4 bytes
//   version u8                          (currently 1)
//   crc32   u32                         checksum of every byte that follows
//   count   u32                         number of entries
//   entry:  name_len u16, name bytes (UTF-8),
//           dtype u8 (1 = f64, 2 = f32, 3 = u8),
//           ndim u8, dims u32 x ndim,
//           payload (row-major, little-endian)
//
// The checksum lets the reader reject any corrupted file instead of
// silently returning garbage values. Trailing bytes after the last entry
// are rejected.

enum class DType : uint8_t { F64 = 1, F32 = 2, U8 = 3 };

inline size_t dtype_size(DType t) {
  switch (t) {
    case DType::F64: return 8;
    case DType::F32: return 4;
    case DType::U8: return 1;
  }
  throw FormatError("unknown dtype code " + std::to_string(static_cast<int>(t)));
}

struct ContainerEntry {
  std::string name;
  DType dtype = DType::F64;
  std::vector<uint32_t> dims;
  std::vector<uint8_t> payload;  // raw little-endian bytes

  size_t element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
  }

  static ContainerEntry from_f64(std::string name, std::vector<uint32_t> dims,
                                 std::span<const double> values);
  static ContainerEntry from_f32(std::string name, std::vector<uint32_t> dims,
                                 std::span<const float> values);
  static ContainerEntry from_u8(std::string name, std::vector<uint32_t> dims,
                                std::span<const uint8_t> values);

  std::vector<double> as_f64() const;   // converts f32/u8 payloads as well
  std::vector<float> as_f32() const;
  std::vector<uint8_t> as_u8() const;
};

std::vector<uint8_t> write_container(const std::vector<ContainerEntry>& entries);
std::vector<ContainerEntry> read_container(std::span<const uint8_t> bytes);

// File helpers. Writes go to a temp file and are renamed into place so a
// failed write never leaves a partial container behind.
void save_container(const std::string& path, const std::vector<ContainerEntry>& entries);
std::vector<ContainerEntry> load_container(const std::string& path);

uint32_t crc32(std::span<const uint8_t> bytes);

}  // namespace grasptk
