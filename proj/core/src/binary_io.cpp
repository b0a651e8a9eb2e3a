#include "laborscope/binary_io.hpp"

#include "laborscope/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace laborscope::binary {

static_assert(std::endian::native == std::endian::little,
              "binary cache assumes a little-endian host");

Writer::Writer(std::ostream& out, Payload payload) : out_(out) {
  bytes(kMagic, sizeof(kMagic));
  u32(kVersion);
  u8(static_cast<std::uint8_t>(payload));
}

void Writer::bytes(const void* p, std::size_t n) {
  out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void Writer::u8(std::uint8_t v) { bytes(&v, 1); }
void Writer::u32(std::uint32_t v) { bytes(&v, 4); }
void Writer::u64(std::uint64_t v) { bytes(&v, 8); }
void Writer::i32(std::int32_t v) { bytes(&v, 4); }
void Writer::f64(double v) { bytes(&v, 8); }

void Writer::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

void Writer::f64_array(const double* data, std::size_t n) {
  u64(n);
  bytes(data, n * sizeof(double));
}

void Writer::str_array(const std::vector<std::string>& v) {
  u64(v.size());
  for (const auto& s : v) str(s);
}

Reader::Reader(std::istream& in, Payload expected) : in_(in) {
  char magic[sizeof(kMagic)];
  bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a laborscope cache file (bad magic)");
  }
  const auto version = u32();
  if (version != kVersion) {
    throw DataError("unsupported cache version " + std::to_string(version));
  }
  const auto payload = u8();
  if (payload != static_cast<std::uint8_t>(expected)) {
    throw DataError("cache holds a different payload kind");
  }
}

void Reader::bytes(void* p, std::size_t n) {
  in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("truncated cache file");
}

std::uint8_t Reader::u8() { std::uint8_t v; bytes(&v, 1); return v; }
std::uint32_t Reader::u32() { std::uint32_t v; bytes(&v, 4); return v; }
std::uint64_t Reader::u64() { std::uint64_t v; bytes(&v, 8); return v; }
std::int32_t Reader::i32() { std::int32_t v; bytes(&v, 4); return v; }
double Reader::f64() { double v; bytes(&v, 8); return v; }

std::string Reader::str() {
  const auto n = u32();
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

void Reader::f64_array(double* data, std::size_t n) {
  const auto stored = u64();
  if (stored != n) throw DataError("cache array length mismatch");
  bytes(data, n * sizeof(double));
}

std::vector<std::string> Reader::str_array() {
  const auto n = u64();
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(str());
  return v;
}

bool has_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  return in.gcount() == static_cast<std::streamsize>(sizeof(kMagic)) &&
         std::memcmp(magic, kMagic, sizeof(kMagic)) == 0;
}

}  // namespace laborscope::binary
