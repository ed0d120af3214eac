#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

namespace drsl {

// Persistent feature store keyed by slide id, then dense tile index. Stored
// features are unit-norm f32 vectors of a fixed dimension. Mutations bump a
// version counter; readers take snapshots, so a later write never mutates a
// vector someone already retrieved. replace_batch is validate-then-apply
// under one writer lock, giving per-batch atomicity.
class MemoryBank {
 public:
  explicit MemoryBank(int64_t feature_dim);

  // moving is single-threaded by contract; the mutex starts fresh
  MemoryBank(MemoryBank&& o) noexcept
      : d_(o.d_), version_(o.version_), entries_(std::move(o.entries_)) {}
  MemoryBank& operator=(MemoryBank&&) = delete;
  MemoryBank(const MemoryBank&) = delete;
  MemoryBank& operator=(const MemoryBank&) = delete;

  int64_t feature_dim() const { return d_; }
  uint64_t version() const;

  void insert(const std::string& slide_id, int tile_index,
              const std::vector<float>& feature);

  // features ascending by tile index; copies, not references
  std::vector<std::vector<float>> get_slide(const std::string& slide_id) const;
  std::vector<int> tile_indices(const std::string& slide_id) const;

  bool has_slide(const std::string& slide_id) const;
  size_t slide_count() const;
  size_t tile_count(const std::string& slide_id) const;

  struct Update {
    std::string slide_id;
    int tile_index;
    std::vector<float> feature;
  };
  // every slide must already exist; nothing is applied on error
  void replace_batch(const std::vector<Update>& updates);

  // flattened dump in persisted order, for whole-bank diffing
  struct Entry {
    std::string slide_id;
    int tile_index;
    std::vector<float> feature;
  };
  std::vector<Entry> dump() const;

  void save(const std::string& path) const;
  static MemoryBank load(const std::string& path);

 private:
  void check_dim(const std::vector<float>& f) const;
  static std::vector<float> normalized(std::vector<float> f);

  int64_t d_;
  uint64_t version_ = 0;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::map<int, std::vector<float>>> entries_;
};

}  // namespace drsl
