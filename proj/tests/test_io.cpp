#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "drsl/errors.hpp"
#include "drsl/io_util.hpp"

using namespace drsl;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir() {
  auto p = fs::temp_directory_path() / "drsl_io_test";
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("crc64 matches the reference check value") {
  // standard check string for CRC-64/XZ
  CHECK(crc64("123456789") == UINT64_C(0x995DC9BBDF1939FA));
  CHECK(crc64("") == UINT64_C(0));
  CHECK(crc64("a") != crc64("b"));
}

TEST_CASE("writer and reader round trip every scalar kind") {
  ByteWriter w;
  w.magic("TEST");
  w.u8(250);
  w.u32(123456789u);
  w.u64(UINT64_C(0x1122334455667788));
  w.f32(1.5f);
  w.f64(-2.25);
  w.str32("hello");
  w.str64(std::string(300, 'x'));
  std::vector<float> vf{1.0f, -2.0f, 3.5f};
  std::vector<double> vd{0.125, 9.0};
  w.scalar_array(vf.data(), vf.size());
  w.scalar_array(vd.data(), vd.size());

  std::string bytes = w.take();
  ByteReader r(bytes);
  r.expect_magic("TEST", "unit blob");
  CHECK(r.u8() == 250);
  CHECK(r.u32() == 123456789u);
  CHECK(r.u64() == UINT64_C(0x1122334455667788));
  CHECK(r.f32() == 1.5f);
  CHECK(r.f64() == -2.25);
  CHECK(r.str32() == "hello");
  CHECK(r.str64() == std::string(300, 'x'));
  std::vector<float> rf(3);
  std::vector<double> rd(2);
  r.scalar_array(rf.data(), rf.size());
  r.scalar_array(rd.data(), rd.size());
  CHECK(rf == vf);
  CHECK(rd == vd);
  CHECK(r.at_end());
}

TEST_CASE("crc trailer detects a flipped byte") {
  ByteWriter w;
  w.magic("BLOB");
  w.u32(7);
  w.str32("payload");
  w.finish_with_crc();
  std::string good = w.take();

  CHECK_NOTHROW(ByteReader::check_crc(good, "blob"));
  std::string bad = good;
  bad[5] = char(bad[5] ^ 0x40);
  CHECK_THROWS_AS(ByteReader::check_crc(bad, "blob"), FormatError);

  // payload_without_crc strips exactly the 8-byte trailer
  auto payload = ByteReader::payload_without_crc(good);
  CHECK(payload.size() == good.size() - 8);
}

TEST_CASE("bad magic reports the byte offset") {
  ByteWriter w;
  w.magic("AAAA");
  std::string bytes = w.take();
  ByteReader r(bytes);
  try {
    r.expect_magic("BBBB", "thing");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    std::string msg = e.what();
    CHECK(msg.find("byte offset 0") != std::string::npos);
  }
}

TEST_CASE("truncated input raises a format error with position") {
  ByteWriter w;
  w.u32(1);
  std::string bytes = w.take();
  ByteReader r(bytes);
  r.u32();
  CHECK_THROWS_AS(r.u64(), FormatError);
}

TEST_CASE("string length guard rejects absurd sizes") {
  ByteWriter w;
  w.u32(0xFFFFFFFFu);  // claims a 4 GiB string
  std::string bytes = w.take();
  ByteReader r(bytes);
  CHECK_THROWS_AS(r.str32(), FormatError);
}

TEST_CASE("atomic write replaces files and creates parents") {
  auto dir = temp_dir();
  auto path = dir / "sub" / "file.bin";
  fs::remove_all(dir / "sub");

  atomic_write_file(path.string(), "first");
  CHECK(read_file(path.string()) == "first");
  atomic_write_file(path.string(), "second");
  CHECK(read_file(path.string()) == "second");
  CHECK(!fs::exists(path.string() + ".tmp"));
  fs::remove_all(dir);
}

TEST_CASE("reading a missing file is an io error") {
  CHECK_THROWS_AS(read_file("/nonexistent/drsl/path.bin"), IoError);
}
