#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "drsl/errors.hpp"

namespace drsl {

// CRC-64/XZ (ECMA-182 polynomial, reflected, init/xorout ~0).
// crc64("123456789") == 0x995DC9BBDF1939FA.
uint64_t crc64(const void* data, size_t len);
uint64_t crc64(std::string_view s);

// ---- little-endian record building ----------------------------------------

class ByteWriter {
 public:
  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f32(float v);
  void f64(double v);
  void raw(const void* p, size_t n);
  void magic(const char tag[4]) { raw(tag, 4); }
  // u32 length prefix + bytes
  void str32(std::string_view s);
  // u64 length prefix + bytes
  void str64(std::string_view s);

  template <typename T>
  void scalar_array(const T* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if constexpr (sizeof(T) == 4) {
        f32(float(p[i]));
      } else {
        f64(double(p[i]));
      }
    }
  }

  // appends CRC-64 of everything written so far
  void finish_with_crc();

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  float f32();
  double f64();
  std::string str32();
  std::string str64();
  void expect_magic(const char tag[4], const std::string& what);

  template <typename T>
  void scalar_array(T* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if constexpr (sizeof(T) == 4) {
        p[i] = T(f32());
      } else {
        p[i] = T(f64());
      }
    }
  }

  // verifies a trailing CRC-64 over all bytes before it; call before parsing
  static void check_crc(std::string_view file, const std::string& what);
  // strips the trailing checksum after check_crc
  static std::string_view payload_without_crc(std::string_view file);

  size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  const void* need(size_t n, const char* what);
  std::string_view data_;
  size_t pos_ = 0;
};

// ---- files -----------------------------------------------------------------

std::string read_file(const std::string& path);
// temp-file + rename so readers never observe a partial artifact
void atomic_write_file(const std::string& path, std::string_view contents);

}  // namespace drsl
