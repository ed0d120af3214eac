#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drsl/codebook.hpp"
#include "drsl/graph.hpp"

namespace drsl {

struct VladOptions {
  // per-cluster block normalization before the global one; off by default
  bool intra_normalize = false;
};

// Graph-attached residual encoding of one slide. `fresh` rows carry
// gradients; stale features are constants. Assignments are recomputed from
// current values on every call and never differentiated through.
template <typename T>
struct VladResult {
  Var flat;              // [K*d], globally L2-normalized
  Var flat_raw;          // [K*d], pre-normalization block concatenation
  std::vector<int> assignments;  // per tile, ascending tile-index order
};

template <typename T>
VladResult<T> encode_slide(Graph<T>& g, const Codebook& cb,
                           std::optional<Var> fresh,
                           const std::vector<int>& fresh_tiles,
                           const std::vector<int>& stale_tiles,
                           const std::vector<std::vector<T>>& stale_features,
                           const VladOptions& opts = {});

// Concrete descriptor for persistence and evaluation output.
struct VladDescriptor {
  int64_t k = 0;
  int64_t d = 0;
  std::vector<float> flat;  // length k*d
  bool norm_applied = true;
};

// descriptor file: magic "DRSV", u32 K, u32 d, then per slide:
// length-prefixed id + K*d f32 values, records until end of file
void write_descriptors(const std::string& path,
                       const std::vector<std::pair<std::string, VladDescriptor>>& rows);
std::vector<std::pair<std::string, VladDescriptor>> read_descriptors(const std::string& path);

}  // namespace drsl
