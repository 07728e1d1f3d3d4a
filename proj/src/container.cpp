#include "grasptk/container.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_set>

namespace grasptk {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'M', 'T', 'C'};
constexpr uint8_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Reader {
  std::span<const uint8_t> bytes;
  size_t pos = 0;

  size_t remaining() const { return bytes.size() - pos; }

  void need(size_t n, const char* what) {
    if (remaining() < n)
      throw TruncationError(std::string("container truncated while reading ") + what);
  }

  uint8_t u8(const char* what) {
    need(1, what);
    return bytes[pos++];
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(bytes[pos]) | static_cast<uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::span<const uint8_t> raw(size_t n, const char* what) {
    need(n, what);
    auto s = bytes.subspan(pos, n);
    pos += n;
    return s;
  }
};

// Values are stored little-endian; this codebase targets little-endian hosts
// and memcpy keeps payloads bit-exact.
template <typename T>
std::vector<uint8_t> to_bytes(std::span<const T> values) {
  std::vector<uint8_t> out(values.size() * sizeof(T));
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<uint8_t>& payload) {
  std::vector<T> out(payload.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), payload.data(), payload.size());
  return out;
}

}  // namespace

uint32_t crc32(std::span<const uint8_t> bytes) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xffffffffu;
  for (uint8_t b : bytes) crc = table[(crc ^ b) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

ContainerEntry ContainerEntry::from_f64(std::string name, std::vector<uint32_t> dims,
                                        std::span<const double> values) {
  ContainerEntry e{std::move(name), DType::F64, std::move(dims), to_bytes(values)};
  return e;
}

ContainerEntry ContainerEntry::from_f32(std::string name, std::vector<uint32_t> dims,
                                        std::span<const float> values) {
  ContainerEntry e{std::move(name), DType::F32, std::move(dims), to_bytes(values)};
  return e;
}

ContainerEntry ContainerEntry::from_u8(std::string name, std::vector<uint32_t> dims,
                                       std::span<const uint8_t> values) {
  ContainerEntry e{std::move(name), DType::U8, std::move(dims),
                   std::vector<uint8_t>(values.begin(), values.end())};
  return e;
}

std::vector<double> ContainerEntry::as_f64() const {
  switch (dtype) {
    case DType::F64: return from_bytes<double>(payload);
    case DType::F32: {
      auto f = from_bytes<float>(payload);
      return {f.begin(), f.end()};
    }
    case DType::U8: return {payload.begin(), payload.end()};
  }
  throw FormatError("unknown dtype");
}

std::vector<float> ContainerEntry::as_f32() const {
  switch (dtype) {
    case DType::F32: return from_bytes<float>(payload);
    case DType::F64: {
      auto d = from_bytes<double>(payload);
      return {d.begin(), d.end()};
    }
    case DType::U8: return {payload.begin(), payload.end()};
  }
  throw FormatError("unknown dtype");
}

std::vector<uint8_t> ContainerEntry::as_u8() const {
  if (dtype != DType::U8) throw FormatError("entry is not u8: " + name);
  return payload;
}

std::vector<uint8_t> write_container(const std::vector<ContainerEntry>& entries) {
  std::unordered_set<std::string> seen;
  std::vector<uint8_t> body;
  put_u32(body, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (!seen.insert(e.name).second)
      throw DuplicateNameError("duplicate entry name: " + e.name);
    if (e.name.size() > 0xffff)
      throw FormatError("entry name too long: " + std::to_string(e.name.size()));
    if (e.dims.size() > 0xff)
      throw FormatError("too many dimensions: " + std::to_string(e.dims.size()));
    const size_t expect = e.element_count() * dtype_size(e.dtype);
    if (expect != e.payload.size())
      throw FormatError("payload size " + std::to_string(e.payload.size()) +
                        " does not match dims for entry " + e.name);
    put_u16(body, static_cast<uint16_t>(e.name.size()));
    body.insert(body.end(), e.name.begin(), e.name.end());
    body.push_back(static_cast<uint8_t>(e.dtype));
    body.push_back(static_cast<uint8_t>(e.dims.size()));
    for (uint32_t d : e.dims) put_u32(body, d);
    body.insert(body.end(), e.payload.begin(), e.payload.end());
  }

  std::vector<uint8_t> out;
  out.reserve(body.size() + 13);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(kVersion);
  put_u32(out, crc32(body));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<ContainerEntry> read_container(std::span<const uint8_t> bytes) {
  Reader r{bytes};
  auto magic = r.raw(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw FormatError("bad magic");
  uint8_t version = r.u8("version");
  if (version != kVersion)
    throw FormatError("unsupported container version " + std::to_string(version));
  uint32_t expect_crc = r.u32("checksum");
  if (crc32(bytes.subspan(r.pos)) != expect_crc)
    throw FormatError("checksum mismatch");

  uint32_t count = r.u32("entry count");
  std::vector<ContainerEntry> entries;
  entries.reserve(count);
  std::unordered_set<std::string> seen;
  for (uint32_t i = 0; i < count; ++i) {
    ContainerEntry e;
    uint16_t name_len = r.u16("name length");
    auto name_bytes = r.raw(name_len, "name");
    e.name.assign(name_bytes.begin(), name_bytes.end());
    if (!seen.insert(e.name).second)
      throw DuplicateNameError("duplicate entry name: " + e.name);
    uint8_t dtype_code = r.u8("dtype");
    if (dtype_code < 1 || dtype_code > 3)
      throw FormatError("unknown dtype code " + std::to_string(dtype_code));
    e.dtype = static_cast<DType>(dtype_code);
    uint8_t ndim = r.u8("ndim");
    e.dims.resize(ndim);
    uint64_t n = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      e.dims[d] = r.u32("dims");
      n *= e.dims[d];
    }
    const uint64_t payload_len = n * dtype_size(e.dtype);
    if (payload_len > r.remaining())
      throw TruncationError("payload for entry " + e.name + " extends past end of file");
    auto payload = r.raw(static_cast<size_t>(payload_len), "payload");
    e.payload.assign(payload.begin(), payload.end());
    entries.push_back(std::move(e));
  }
  if (r.remaining() != 0)
    throw FormatError("unexpected trailing bytes: " + std::to_string(r.remaining()));
  return entries;
}

void save_container(const std::string& path, const std::vector<ContainerEntry>& entries) {
  const auto bytes = write_container(entries);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for write: " + tmp);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<ContainerEntry> load_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return read_container(bytes);
}

}  // namespace grasptk
