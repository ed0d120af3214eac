#include "drsl/io_util.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace drsl {

namespace {

std::array<uint64_t, 256> make_crc64_table() {
  // reflected form of the ECMA-182 polynomial
  const uint64_t poly = 0xC96C5795D7870F42ull;
  std::array<uint64_t, 256> table{};
  for (uint64_t i = 0; i < 256; ++i) {
    uint64_t crc = i;
    for (int b = 0; b < 8; ++b) {
      crc = (crc & 1) ? (crc >> 1) ^ poly : crc >> 1;
    }
    table[size_t(i)] = crc;
  }
  return table;
}

const std::array<uint64_t, 256>& crc64_table() {
  static const std::array<uint64_t, 256> table = make_crc64_table();
  return table;
}

}  // namespace

uint64_t crc64(const void* data, size_t len) {
  const auto& table = crc64_table();
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t crc = ~0ull;
  for (size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  }
  return ~crc;
}

uint64_t crc64(std::string_view s) { return crc64(s.data(), s.size()); }

void ByteWriter::u32(uint32_t v) {
  uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                  uint8_t(v >> 24)};
  raw(b, 4);
}

void ByteWriter::u64(uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = uint8_t(v >> (8 * i));
  raw(b, 8);
}

void ByteWriter::f32(float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  u32(u);
}

void ByteWriter::f64(double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  u64(u);
}

void ByteWriter::raw(const void* p, size_t n) {
  buf_.append(static_cast<const char*>(p), n);
}

void ByteWriter::str32(std::string_view s) {
  u32(uint32_t(s.size()));
  raw(s.data(), s.size());
}

void ByteWriter::str64(std::string_view s) {
  u64(s.size());
  raw(s.data(), s.size());
}

void ByteWriter::finish_with_crc() { u64(crc64(buf_)); }

const void* ByteReader::need(size_t n, const char* what) {
  if (pos_ + n > data_.size()) {
    throw FormatError(std::string("truncated file while reading ") + what,
                      pos_);
  }
  const void* p = data_.data() + pos_;
  pos_ += n;
  return p;
}

uint8_t ByteReader::u8() {
  return *static_cast<const uint8_t*>(need(1, "u8"));
}

uint32_t ByteReader::u32() {
  const auto* b = static_cast<const uint8_t*>(need(4, "u32"));
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint64_t ByteReader::u64() {
  const auto* b = static_cast<const uint8_t*>(need(8, "u64"));
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

float ByteReader::f32() {
  uint32_t u = u32();
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

double ByteReader::f64() {
  uint64_t u = u64();
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

std::string ByteReader::str32() {
  uint32_t n = u32();
  const char* p = static_cast<const char*>(need(n, "string"));
  return std::string(p, n);
}

std::string ByteReader::str64() {
  uint64_t n = u64();
  const char* p = static_cast<const char*>(need(size_t(n), "string"));
  return std::string(p, size_t(n));
}

void ByteReader::expect_magic(const char tag[4], const std::string& what) {
  size_t at = pos_;
  const char* p = static_cast<const char*>(need(4, "magic"));
  if (std::memcmp(p, tag, 4) != 0) {
    throw FormatError("bad magic for " + what + ", expected '" +
                          std::string(tag, 4) + "'",
                      at);
  }
}

void ByteReader::check_crc(std::string_view file, const std::string& what) {
  if (file.size() < 8) {
    throw FormatError(what + ": too short for checksum", file.size());
  }
  size_t body = file.size() - 8;
  ByteReader tail(file.substr(body));
  uint64_t stored = tail.u64();
  uint64_t actual = crc64(file.data(), body);
  if (stored != actual) {
    throw FormatError(what + ": checksum mismatch", body);
  }
}

std::string_view ByteReader::payload_without_crc(std::string_view file) {
  return file.substr(0, file.size() - 8);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return data;
}

void atomic_write_file(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp);
    out.write(contents.data(), std::streamsize(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename failed: " + tmp + " -> " + path);
}

}  // namespace drsl
