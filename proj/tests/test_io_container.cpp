#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "grasptk/container.hpp"
#include "grasptk/rng.hpp"

using namespace grasptk;

namespace {

std::vector<ContainerEntry> random_entries(Rng& rng) {
  std::vector<ContainerEntry> entries;
  const size_t n = rng.integer(4);
  for (size_t i = 0; i < n; ++i) {
    std::vector<uint32_t> dims;
    const size_t nd = 1 + rng.integer(3);
    for (size_t d = 0; d < nd; ++d) dims.push_back(static_cast<uint32_t>(1 + rng.integer(5)));
    size_t count = 1;
    for (uint32_t d : dims) count *= d;
    const std::string name = "t" + std::to_string(i) + "_" + std::to_string(rng.integer(1000));
    switch (rng.integer(3)) {
      case 0: {
        std::vector<double> v(count);
        for (auto& x : v) x = rng.normal();
        entries.push_back(ContainerEntry::from_f64(name, dims, v));
        break;
      }
      case 1: {
        std::vector<float> v(count);
        for (auto& x : v) x = static_cast<float>(rng.normal());
        entries.push_back(ContainerEntry::from_f32(name, dims, v));
        break;
      }
      default: {
        std::vector<uint8_t> v(count);
        for (auto& x : v) x = static_cast<uint8_t>(rng.integer(256));
        entries.push_back(ContainerEntry::from_u8(name, dims, v));
        break;
      }
    }
  }
  return entries;
}

bool entries_equal(const std::vector<ContainerEntry>& a, const std::vector<ContainerEntry>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].dtype != b[i].dtype || a[i].dims != b[i].dims ||
        a[i].payload != b[i].payload)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("empty container round-trips") {
  const auto bytes = write_container({});
  const auto back = read_container(bytes);
  CHECK(back.empty());
}

TEST_CASE("single f64 tensor round-trips bit-exactly") {
  std::vector<double> vals = {0, 1, 2, 3, 4, 5};
  const auto e = ContainerEntry::from_f64("grid", {2, 3}, vals);
  const auto bytes = write_container({e});
  const auto back = read_container(bytes);
  REQUIRE(back.size() == 1);
  CHECK(back[0].name == "grid");
  CHECK(back[0].dims == std::vector<uint32_t>{2, 3});
  CHECK(back[0].payload == e.payload);
  CHECK(back[0].as_f64() == vals);
}

TEST_CASE("all dtypes round-trip") {
  std::vector<double> d = {1.5, -2.25};
  std::vector<float> f = {3.5f, -0.125f, 7.0f};
  std::vector<uint8_t> u = {0, 127, 255};
  const auto bytes = write_container({
      ContainerEntry::from_f64("d", {2}, d),
      ContainerEntry::from_f32("f", {3}, f),
      ContainerEntry::from_u8("u", {3}, u),
  });
  const auto back = read_container(bytes);
  REQUIRE(back.size() == 3);
  CHECK(back[0].as_f64() == d);
  CHECK(back[1].as_f32() == f);
  CHECK(back[2].as_u8() == u);
}

TEST_CASE("duplicate names are rejected") {
  std::vector<double> v = {1.0};
  const auto a = ContainerEntry::from_f64("same", {1}, v);
  CHECK_THROWS_AS(write_container({a, a}), DuplicateNameError);
}

TEST_CASE("bad magic is rejected") {
  auto bytes = write_container({ContainerEntry::from_f64("x", {1}, std::vector<double>{1.0})});
  bytes[0] = 'X';
  CHECK_THROWS_AS(read_container(bytes), FormatError);
}

TEST_CASE("unsupported version is rejected") {
  auto bytes = write_container({});
  bytes[4] = 9;
  CHECK_THROWS_AS(read_container(bytes), FormatError);
}

TEST_CASE("truncated payload is rejected") {
  auto bytes = write_container({ContainerEntry::from_f64("x", {4}, std::vector<double>(4, 1.0))});
  bytes.resize(bytes.size() - 5);
  CHECK_THROWS_AS(read_container(bytes), Error);
}

TEST_CASE("trailing bytes are rejected") {
  auto bytes = write_container({ContainerEntry::from_u8("x", {2}, std::vector<uint8_t>{1, 2})});
  bytes.push_back(0);
  CHECK_THROWS_AS(read_container(bytes), Error);
}

TEST_CASE("unknown dtype code is rejected even with a fixed checksum") {
  auto bytes = write_container({ContainerEntry::from_u8("x", {2}, std::vector<uint8_t>{1, 2})});
  // magic(4) + version(1) + crc(4) + count(4) + name_len(2) + "x"(1)
  const size_t dtype_pos = 4 + 1 + 4 + 4 + 2 + 1;
  bytes[dtype_pos] = 7;
  const uint32_t crc = crc32({bytes.data() + 9, bytes.size() - 9});
  for (int i = 0; i < 4; ++i) bytes[5 + i] = static_cast<uint8_t>((crc >> (8 * i)) & 0xff);
  CHECK_THROWS_AS(read_container(bytes), FormatError);
}

TEST_CASE("random containers round-trip") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto entries = random_entries(rng);
    const auto back = read_container(write_container(entries));
    CHECK(entries_equal(entries, back));
  }
}

TEST_CASE("single-byte corruption always raises a structured error") {
  Rng rng(7);
  auto entries = random_entries(rng);
  entries.push_back(ContainerEntry::from_f64("pad", {6}, std::vector<double>(6, 1.25)));
  const auto bytes = write_container(entries);
  for (int trial = 0; trial < 300; ++trial) {
    auto corrupted = bytes;
    const size_t pos = rng.integer(bytes.size());
    corrupted[pos] ^= static_cast<uint8_t>(1 + rng.integer(255));
    CHECK_THROWS_AS(read_container(corrupted), Error);
  }
}

TEST_CASE("file save/load round-trip") {
  Rng rng(11);
  const auto entries = random_entries(rng);
  const std::string path = "/tmp/grasptk_test_container.gmtc";
  save_container(path, entries);
  const auto back = load_container(path);
  CHECK(entries_equal(entries, back));
}
