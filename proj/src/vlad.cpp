#include "drsl/vlad.hpp"

#include "drsl/io_util.hpp"

namespace drsl {

template <typename T>
VladResult<T> encode_slide(Graph<T>& g, const Codebook& cb,
                           std::optional<Var> fresh,
                           const std::vector<int>& fresh_tiles,
                           const std::vector<int>& stale_tiles,
                           const std::vector<std::vector<T>>& stale_features,
                           const VladOptions& opts) {
  VladResult<T> out;
  out.flat_raw = g.vlad_pool(fresh, fresh_tiles, stale_tiles, stale_features,
                             cb.centroids(), &out.assignments);
  Var v = out.flat_raw;
  if (opts.intra_normalize) {
    v = g.reshape(g.l2_normalize_rows(g.reshape(v, {cb.k(), cb.dim()})),
                  {cb.k() * cb.dim()});
  }
  out.flat = g.l2_normalize_rows(v);
  return out;
}

template VladResult<float> encode_slide<float>(
    GraphF&, const Codebook&, std::optional<Var>, const std::vector<int>&,
    const std::vector<int>&, const std::vector<std::vector<float>>&,
    const VladOptions&);
template VladResult<double> encode_slide<double>(
    GraphD&, const Codebook&, std::optional<Var>, const std::vector<int>&,
    const std::vector<int>&, const std::vector<std::vector<double>>&,
    const VladOptions&);

void write_descriptors(const std::string& path,
                       const std::vector<std::pair<std::string, VladDescriptor>>& rows) {
  ByteWriter w;
  w.magic("DRSV");
  if (rows.empty()) throw InputError("descriptor file needs at least one slide");
  const int64_t k = rows.front().second.k;
  const int64_t d = rows.front().second.d;
  w.u32(uint32_t(k));
  w.u32(uint32_t(d));
  for (const auto& [id, desc] : rows) {
    if (desc.k != k || desc.d != d || int64_t(desc.flat.size()) != k * d) {
      throw DimensionError("descriptor for slide '" + id + "' does not match K=" +
                           std::to_string(k) + ", d=" + std::to_string(d));
    }
    w.str32(id);
    w.scalar_array(desc.flat.data(), desc.flat.size());
  }
  atomic_write_file(path, w.bytes());
}

std::vector<std::pair<std::string, VladDescriptor>> read_descriptors(const std::string& path) {
  std::string file = read_file(path);
  ByteReader r(file);
  r.expect_magic("DRSV", "descriptor file " + path);
  int64_t k = r.u32();
  int64_t d = r.u32();
  std::vector<std::pair<std::string, VladDescriptor>> rows;
  while (!r.at_end()) {
    VladDescriptor desc;
    desc.k = k;
    desc.d = d;
    std::string id = r.str32();
    desc.flat.resize(size_t(k * d));
    r.scalar_array(desc.flat.data(), desc.flat.size());
    rows.emplace_back(std::move(id), std::move(desc));
  }
  return rows;
}

}  // namespace drsl
