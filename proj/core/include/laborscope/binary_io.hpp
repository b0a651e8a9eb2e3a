#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace laborscope::binary {

// Columnar cache container: 8-byte magic "LSCOPE1\0", u32 format version,
// u8 payload kind, then little-endian payload.
inline constexpr char kMagic[8] = {'L', 'S', 'C', 'O', 'P', 'E', '1', '\0'};
inline constexpr std::uint32_t kVersion = 1;

enum class Payload : std::uint8_t { table = 1, matrix = 2 };

class Writer {
 public:
  Writer(std::ostream& out, Payload payload);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v);
  void f64(double v);
  void str(const std::string& s);
  void f64_array(const double* data, std::size_t n);
  void str_array(const std::vector<std::string>& v);

 private:
  void bytes(const void* p, std::size_t n);
  std::ostream& out_;
};

class Reader {
 public:
  /// Validates magic/version; throws DataError on mismatch or truncation.
  Reader(std::istream& in, Payload expected);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32();
  double f64();
  std::string str();
  void f64_array(double* data, std::size_t n);
  std::vector<std::string> str_array();

 private:
  void bytes(void* p, std::size_t n);
  std::istream& in_;
};

/// True when the file starts with the cache magic.
bool has_magic(const std::filesystem::path& path);

}  // namespace laborscope::binary
