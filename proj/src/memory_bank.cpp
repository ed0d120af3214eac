#include "drsl/memory_bank.hpp"

#include <cmath>
#include <mutex>

#include "drsl/errors.hpp"
#include "drsl/io_util.hpp"

namespace drsl {

MemoryBank::MemoryBank(int64_t feature_dim) : d_(feature_dim) {
  if (feature_dim < 1) throw ConfigError("bank feature_dim must be positive");
}

uint64_t MemoryBank::version() const {
  std::shared_lock lock(mu_);
  return version_;
}

void MemoryBank::check_dim(const std::vector<float>& f) const {
  if (int64_t(f.size()) != d_) {
    throw DimensionError("bank expects features of length " + std::to_string(d_) +
                         ", got " + std::to_string(f.size()));
  }
}

std::vector<float> MemoryBank::normalized(std::vector<float> f) {
  double sq = 0;
  for (float v : f) sq += double(v) * double(v);
  double norm = std::sqrt(sq);
  if (norm > 1e-12) {
    for (float& v : f) v = float(double(v) / norm);
  }
  return f;
}

void MemoryBank::insert(const std::string& slide_id, int tile_index,
                        const std::vector<float>& feature) {
  check_dim(feature);
  if (tile_index < 0) throw InputError("bank tile_index must be non-negative");
  std::unique_lock lock(mu_);
  entries_[slide_id][tile_index] = normalized(feature);
  ++version_;
}

std::vector<std::vector<float>> MemoryBank::get_slide(const std::string& slide_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(slide_id);
  if (it == entries_.end()) throw MissingSlideError(slide_id);
  std::vector<std::vector<float>> out;
  out.reserve(it->second.size());
  for (const auto& [idx, f] : it->second) out.push_back(f);
  return out;
}

std::vector<int> MemoryBank::tile_indices(const std::string& slide_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(slide_id);
  if (it == entries_.end()) throw MissingSlideError(slide_id);
  std::vector<int> out;
  out.reserve(it->second.size());
  for (const auto& [idx, f] : it->second) out.push_back(idx);
  return out;
}

bool MemoryBank::has_slide(const std::string& slide_id) const {
  std::shared_lock lock(mu_);
  return entries_.count(slide_id) > 0;
}

size_t MemoryBank::slide_count() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

size_t MemoryBank::tile_count(const std::string& slide_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(slide_id);
  if (it == entries_.end()) throw MissingSlideError(slide_id);
  return it->second.size();
}

void MemoryBank::replace_batch(const std::vector<Update>& updates) {
  if (updates.empty()) return;
  std::unique_lock lock(mu_);
  // validate everything before touching anything
  for (const auto& u : updates) {
    check_dim(u.feature);
    if (entries_.find(u.slide_id) == entries_.end()) {
      throw MissingSlideError(u.slide_id);
    }
  }
  for (const auto& u : updates) {
    entries_[u.slide_id][u.tile_index] = normalized(u.feature);
  }
  ++version_;
}

std::vector<MemoryBank::Entry> MemoryBank::dump() const {
  std::shared_lock lock(mu_);
  std::vector<Entry> out;
  for (const auto& [sid, tiles] : entries_) {
    for (const auto& [idx, f] : tiles) out.push_back({sid, idx, f});
  }
  return out;
}

void MemoryBank::save(const std::string& path) const {
  std::shared_lock lock(mu_);
  ByteWriter w;
  w.magic("DRSB");
  w.u32(1);  // format version
  w.u32(uint32_t(d_));
  w.u64(entries_.size());
  for (const auto& [sid, tiles] : entries_) {
    w.str32(sid);
    w.u64(tiles.size());
    for (const auto& [idx, f] : tiles) {
      w.u32(uint32_t(idx));
      w.scalar_array(f.data(), f.size());
    }
  }
  w.finish_with_crc();
  atomic_write_file(path, w.bytes());
}

MemoryBank MemoryBank::load(const std::string& path) {
  std::string file = read_file(path);
  ByteReader::check_crc(file, "bank file " + path);
  ByteReader r(ByteReader::payload_without_crc(file));
  r.expect_magic("DRSB", "bank file " + path);
  uint32_t version = r.u32();
  if (version != 1) {
    throw FormatError("unsupported bank format version " + std::to_string(version), 4);
  }
  int64_t d = r.u32();
  MemoryBank bank(d);
  uint64_t slides = r.u64();
  for (uint64_t s = 0; s < slides; ++s) {
    std::string sid = r.str32();
    uint64_t tiles = r.u64();
    auto& slot = bank.entries_[sid];
    for (uint64_t t = 0; t < tiles; ++t) {
      uint32_t idx = r.u32();
      std::vector<float> f(size_t(d), 0.0f);
      r.scalar_array(f.data(), f.size());
      // bit-exact round trip: no re-normalization on load
      slot[int(idx)] = std::move(f);
    }
  }
  return bank;
}

}  // namespace drsl
