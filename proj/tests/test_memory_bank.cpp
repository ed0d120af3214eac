#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "drsl/errors.hpp"
#include "drsl/io_util.hpp"
#include "drsl/memory_bank.hpp"
#include "drsl/rng.hpp"

using namespace drsl;

namespace {

std::vector<float> unit(std::vector<float> v) {
  double n = 0;
  for (float x : v) n += double(x) * x;
  n = std::sqrt(n);
  for (float& x : v) x = float(x / n);
  return v;
}

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("insert, counting and ascending retrieval") {
  MemoryBank bank(3);
  CHECK(bank.version() == 0);
  bank.insert("s1", 2, {0, 0, 1});
  bank.insert("s1", 0, {1, 0, 0});
  bank.insert("s2", 0, {0, 1, 0});
  CHECK(bank.version() == 3);
  CHECK(bank.slide_count() == 2);
  CHECK(bank.tile_count("s1") == 2);
  CHECK(bank.has_slide("s2"));
  CHECK_FALSE(bank.has_slide("s3"));

  auto idx = bank.tile_indices("s1");
  CHECK(idx == std::vector<int>{0, 2});
  auto feats = bank.get_slide("s1");
  CHECK(feats[0][0] == 1.0f);  // tile 0 first despite later insertion
  CHECK(feats[1][2] == 1.0f);

  CHECK_THROWS_AS(bank.get_slide("nope"), MissingSlideError);
  CHECK_THROWS_AS(bank.tile_count("nope"), MissingSlideError);
}

TEST_CASE("inserted features are stored unit-norm") {
  MemoryBank bank(2);
  bank.insert("s", 0, {3, 4});
  auto f = bank.get_slide("s")[0];
  CHECK(f[0] == doctest::Approx(0.6f));
  CHECK(f[1] == doctest::Approx(0.8f));
  double n = std::sqrt(double(f[0]) * f[0] + double(f[1]) * f[1]);
  CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("overwriting a tile bumps the version twice") {
  MemoryBank bank(2);
  bank.insert("s", 0, {1, 0});
  bank.insert("s", 0, {0, 1});
  CHECK(bank.version() == 2);
  CHECK(bank.tile_count("s") == 1);
  CHECK(bank.get_slide("s")[0][1] == 1.0f);
}

TEST_CASE("dimension and index validation") {
  MemoryBank bank(3);
  CHECK_THROWS_AS(bank.insert("s", 0, {1, 0}), DimensionError);
  CHECK_THROWS_AS(bank.insert("s", -1, {1, 0, 0}), InputError);
}

TEST_CASE("snapshots are copies, not views") {
  MemoryBank bank(2);
  bank.insert("s", 0, {1, 0});
  auto snap = bank.get_slide("s");
  bank.insert("s", 0, {0, 1});
  CHECK(snap[0][0] == 1.0f);  // unchanged by the later write
}

TEST_CASE("replace_batch applies atomically and bumps version once") {
  MemoryBank bank(2);
  bank.insert("a", 0, {1, 0});
  bank.insert("a", 1, {0, 1});
  bank.insert("b", 0, {1, 0});
  uint64_t v0 = bank.version();

  std::vector<MemoryBank::Update> ups;
  ups.push_back({"a", 1, unit({1, 1})});
  ups.push_back({"b", 0, unit({1, 3})});
  bank.replace_batch(ups);
  CHECK(bank.version() == v0 + 1);
  CHECK(bank.get_slide("a")[1][0] == doctest::Approx(1.0f / std::sqrt(2.0f)));
  CHECK(bank.get_slide("a")[0][0] == 1.0f);  // untouched tile intact

  // unknown slide: nothing at all is applied
  std::vector<MemoryBank::Update> bad;
  bad.push_back({"a", 0, unit({2, 1})});
  bad.push_back({"ghost", 0, unit({1, 1})});
  auto before = bank.dump();
  CHECK_THROWS_AS(bank.replace_batch(bad), MissingSlideError);
  auto after = bank.dump();
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].slide_id == after[i].slide_id);
    CHECK(before[i].tile_index == after[i].tile_index);
    CHECK(before[i].feature == after[i].feature);
  }
  CHECK(bank.version() == v0 + 1);

  // empty batch is a no-op, version included
  bank.replace_batch({});
  CHECK(bank.version() == v0 + 1);
}

TEST_CASE("replace_batch rejects mis-sized features without applying anything") {
  MemoryBank bank(2);
  bank.insert("a", 0, {1, 0});
  std::vector<MemoryBank::Update> ups;
  ups.push_back({"a", 0, {1, 2, 3}});
  CHECK_THROWS_AS(bank.replace_batch(ups), DimensionError);
  CHECK(bank.get_slide("a")[0][0] == 1.0f);
}

TEST_CASE("save/load round trip is bit-exact") {
  std::string path = tmp_path("drsl_bank_test.drsb");
  MemoryBank bank(4);
  Rng rng(3);
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 5; ++t) {
      std::vector<float> f(4, 0.0f);
      for (auto& x : f) x = float(rng.normal());
      bank.insert("slide" + std::to_string(s), t, f);
    }

  bank.save(path);
  MemoryBank back = MemoryBank::load(path);
  CHECK(back.feature_dim() == 4);
  auto a = bank.dump(), b = back.dump();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].slide_id == b[i].slide_id);
    CHECK(a[i].tile_index == b[i].tile_index);
    CHECK(a[i].feature == b[i].feature);
  }

  // second save of the loaded bank produces identical bytes
  std::string path2 = tmp_path("drsl_bank_test2.drsb");
  back.save(path2);
  CHECK(read_file(path) == read_file(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("corrupted bank file fails the checksum") {
  std::string path = tmp_path("drsl_bank_corrupt.drsb");
  MemoryBank bank(2);
  bank.insert("s", 0, {1, 0});
  bank.save(path);

  std::string bytes = read_file(path);
  bytes[bytes.size() / 2] ^= 0x40;
  std::ofstream(path, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size()));
  CHECK_THROWS_AS(MemoryBank::load(path), FormatError);
  std::remove(path.c_str());
}
