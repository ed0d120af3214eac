#include "drsl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "drsl/errors.hpp"
#include "drsl/io_util.hpp"
#include "drsl/rng.hpp"

namespace drsl {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (slides_per_class < 1) throw ConfigError("slides_per_class must be positive");
  if (tiles_min < 1 || tiles_max < tiles_min)
    throw ConfigError("tile count range must satisfy 1 <= tiles_min <= tiles_max");
  if (input_dim < 1 || report_dim < 1)
    throw ConfigError("input_dim and report_dim must be positive");
  if (num_classes > input_dim || num_classes > report_dim)
    throw ConfigError("orthonormal class directions need num_classes <= input_dim and <= report_dim");
  if (!(class_signal_fraction > 0.0) || class_signal_fraction > 1.0)
    throw ConfigError("class_signal_fraction must be in (0, 1]");
  if (noise_scale < 0.0 || report_noise < 0.0)
    throw ConfigError("noise scales must be non-negative");
}

std::vector<std::vector<float>> Dataset::tiles(size_t slide_idx) const {
  if (slide_idx >= slides.size())
    throw IndexError("slide index " + std::to_string(slide_idx) + " out of range (" +
                     std::to_string(slides.size()) + " slides)");
  const Slide& s = slides[slide_idx];
  if (s.tile_file.empty()) return s.tiles;
  auto [id, tiles] = read_tile_file(s.tile_file);
  if (id != s.id)
    throw DataError("tile file " + s.tile_file + " holds slide '" + id +
                    "', manifest expects '" + s.id + "'");
  return tiles;
}

namespace {

// rows of orthonormal directions obtained by Gram-Schmidt over normal draws
std::vector<std::vector<double>> orthonormal_directions(int count, int64_t dim, Rng& rng) {
  std::vector<std::vector<double>> dirs;
  dirs.reserve(static_cast<size_t>(count));
  for (int c = 0; c < count; ++c) {
    std::vector<double> v(static_cast<size_t>(dim), 0.0);
    for (int retry = 0; retry < 64; ++retry) {
      for (auto& x : v) x = rng.normal();
      for (const auto& prev : dirs) {
        double dot = 0.0;
        for (size_t i = 0; i < v.size(); ++i) dot += v[i] * prev[i];
        for (size_t i = 0; i < v.size(); ++i) v[i] -= dot * prev[i];
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (auto& x : v) x /= norm;
        break;
      }
      if (retry == 63) throw NumericError("failed to draw independent class directions");
    }
    dirs.push_back(v);
  }
  return dirs;
}

std::string slide_name(int label, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "slide_%d_%03d", label, index);
  return std::string(buf);
}

}  // namespace

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = Rng(spec.seed).stream("synth");

  auto tile_dirs = orthonormal_directions(spec.num_classes, spec.input_dim, rng);
  auto report_dirs = orthonormal_directions(spec.num_classes, spec.report_dim, rng);

  Dataset ds;
  ds.input_dim = spec.input_dim;
  ds.num_classes = spec.num_classes;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int s = 0; s < spec.slides_per_class; ++s) {
      Dataset::Slide slide;
      slide.id = slide_name(c, s);
      slide.label = c;
      int n = spec.tiles_min + rng.uniform_int(spec.tiles_max - spec.tiles_min + 1);
      int n_signal = static_cast<int>(
          std::ceil(spec.class_signal_fraction * static_cast<double>(n)));
      n_signal = std::min(n_signal, n);
      slide.tiles.reserve(static_cast<size_t>(n));
      for (int t = 0; t < n; ++t) {
        std::vector<float> tile(static_cast<size_t>(spec.input_dim), 0.0f);
        bool signal = t < n_signal;
        for (int64_t i = 0; i < spec.input_dim; ++i) {
          double mean = signal ? tile_dirs[static_cast<size_t>(c)][static_cast<size_t>(i)] : 0.0;
          tile[static_cast<size_t>(i)] =
              static_cast<float>(mean + spec.noise_scale * rng.normal());
        }
        slide.tiles.push_back(std::move(tile));
      }
      slide.tile_count = n;
      std::vector<double> rep(static_cast<size_t>(spec.report_dim), 0.0);
      double norm = 0.0;
      for (int64_t i = 0; i < spec.report_dim; ++i) {
        rep[static_cast<size_t>(i)] =
            report_dirs[static_cast<size_t>(c)][static_cast<size_t>(i)] +
            spec.report_noise * rng.normal();
        norm += rep[static_cast<size_t>(i)] * rep[static_cast<size_t>(i)];
      }
      norm = std::sqrt(norm);
      if (norm < 1e-12) throw NumericError("degenerate report embedding draw");
      slide.report.t.resize(static_cast<size_t>(spec.report_dim));
      for (int64_t i = 0; i < spec.report_dim; ++i)
        slide.report.t[static_cast<size_t>(i)] =
            static_cast<float>(rep[static_cast<size_t>(i)] / norm);
      slide.report.present = true;
      ds.slides.push_back(std::move(slide));
    }
  }
  return ds;
}

void write_tile_file(const std::string& path, const std::string& slide_id,
                     const std::vector<std::vector<float>>& tiles) {
  ByteWriter w;
  w.magic("DRSB");
  w.u32(1);
  uint32_t d = tiles.empty() ? 0 : static_cast<uint32_t>(tiles[0].size());
  w.u32(d);
  w.u64(1);
  w.str32(slide_id);
  w.u64(tiles.size());
  for (size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i].size() != d)
      throw DimensionError("tile " + std::to_string(i) + " of slide '" + slide_id +
                           "' has " + std::to_string(tiles[i].size()) +
                           " values, expected " + std::to_string(d));
    w.u32(static_cast<uint32_t>(i));
    for (float x : tiles[i]) w.f32(x);
  }
  w.finish_with_crc();
  atomic_write_file(path, w.bytes());
}

std::pair<std::string, std::vector<std::vector<float>>> read_tile_file(
    const std::string& path) {
  std::string file = read_file(path);
  ByteReader::check_crc(file, "tile file " + path);
  ByteReader r(ByteReader::payload_without_crc(file));
  r.expect_magic("DRSB", "tile file " + path);
  uint32_t ver = r.u32();
  if (ver != 1)
    throw FormatError("tile file " + path + " has unsupported version " +
                          std::to_string(ver),
                      r.pos());
  uint32_t d = r.u32();
  uint64_t slide_count = r.u64();
  if (slide_count != 1)
    throw FormatError("tile file " + path + " must hold exactly one slide, found " +
                          std::to_string(slide_count),
                      r.pos());
  std::string id = r.str32();
  uint64_t n = r.u64();
  std::vector<std::vector<float>> tiles;
  tiles.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    uint32_t idx = r.u32();
    if (idx != i)
      throw FormatError("tile file " + path + " has non-dense tile index " +
                            std::to_string(idx) + " at record " + std::to_string(i),
                        r.pos());
    std::vector<float> tile(static_cast<size_t>(d), 0.0f);
    for (uint32_t j = 0; j < d; ++j) tile[j] = r.f32();
    tiles.push_back(std::move(tile));
  }
  return {std::move(id), std::move(tiles)};
}

void write_reports(
    const std::string& path,
    const std::vector<std::pair<std::string, std::vector<float>>>& records) {
  ByteWriter w;
  w.magic("DRST");
  uint32_t t_dim = records.empty() ? 0 : static_cast<uint32_t>(records[0].second.size());
  w.u32(t_dim);
  w.u64(records.size());
  for (const auto& [id, vec] : records) {
    if (vec.size() != t_dim)
      throw DimensionError("report for '" + id + "' has " + std::to_string(vec.size()) +
                           " values, expected " + std::to_string(t_dim));
    w.str32(id);
    for (float x : vec) w.f32(x);
  }
  atomic_write_file(path, w.bytes());
}

std::vector<std::pair<std::string, std::vector<float>>> read_reports(
    const std::string& path) {
  std::string file = read_file(path);
  ByteReader r(file);
  r.expect_magic("DRST", "report file " + path);
  uint32_t t_dim = r.u32();
  uint64_t count = r.u64();
  std::vector<std::pair<std::string, std::vector<float>>> records;
  records.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    std::string id = r.str32();
    std::vector<float> vec(static_cast<size_t>(t_dim), 0.0f);
    for (uint32_t j = 0; j < t_dim; ++j) vec[j] = r.f32();
    records.emplace_back(std::move(id), std::move(vec));
  }
  if (!r.at_end())
    throw FormatError("report file " + path + " has trailing bytes", r.pos());
  return records;
}

Dataset load_manifest(const std::string& manifest_path, const std::string& reports_path) {
  std::string text = read_file(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();

  Dataset ds;
  bool have_dims = false;
  std::vector<int64_t> report_offsets;  // -1 when absent
  std::unordered_set<std::string> seen_ids;

  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream tok(line);
    std::string kind;
    if (!(tok >> kind) || kind[0] == '#') continue;
    if (kind == "dims") {
      if (have_dims)
        throw DataError("manifest line " + std::to_string(line_no) + ": duplicate dims line");
      if (!(tok >> ds.input_dim >> ds.num_classes) || ds.input_dim < 1 || ds.num_classes < 2)
        throw DataError("manifest line " + std::to_string(line_no) +
                        ": dims needs positive input_dim and num_classes >= 2");
      have_dims = true;
    } else if (kind == "slide") {
      if (!have_dims)
        throw DataError("manifest line " + std::to_string(line_no) +
                        ": slide listed before dims line");
      Dataset::Slide slide;
      std::string rel;
      if (!(tok >> slide.id >> slide.label >> rel))
        throw DataError("manifest line " + std::to_string(line_no) +
                        ": expected `slide <id> <label> <tile_file> [<report_record>]`");
      if (!seen_ids.insert(slide.id).second)
        throw DataError("duplicate slide id '" + slide.id + "' in manifest");
      if (slide.label < 0 || slide.label >= ds.num_classes)
        throw DataError("slide '" + slide.id + "' has label " + std::to_string(slide.label) +
                        " outside [0, " + std::to_string(ds.num_classes) + ")");
      slide.tile_file = (base / rel).string();
      int64_t offset = -1;
      if (tok >> offset && offset < 0)
        throw DataError("slide '" + slide.id + "' has negative report record index");
      report_offsets.push_back(offset);

      auto [file_id, tiles] = read_tile_file(slide.tile_file);
      if (file_id != slide.id)
        throw DataError("tile file " + slide.tile_file + " holds slide '" + file_id +
                        "', manifest expects '" + slide.id + "'");
      if (tiles.empty())
        throw DataError("slide '" + slide.id + "' has no tiles");
      for (const auto& t : tiles)
        if (static_cast<int64_t>(t.size()) != ds.input_dim)
          throw DataError("slide '" + slide.id + "' has tile dimension " +
                          std::to_string(t.size()) + ", manifest dims say " +
                          std::to_string(ds.input_dim));
      slide.tile_count = static_cast<int64_t>(tiles.size());
      ds.slides.push_back(std::move(slide));
    } else {
      throw DataError("manifest line " + std::to_string(line_no) + ": unknown directive '" +
                      kind + "'");
    }
  }
  if (!have_dims) throw DataError("manifest " + manifest_path + " has no dims line");

  bool any_report = std::any_of(report_offsets.begin(), report_offsets.end(),
                                [](int64_t o) { return o >= 0; });
  if (any_report) {
    std::string rp = reports_path.empty() ? (base / "reports.drst").string() : reports_path;
    if (!fs::exists(rp))
      throw DataError("manifest references report records but report file " + rp +
                      " does not exist");
    auto records = read_reports(rp);
    for (size_t i = 0; i < ds.slides.size(); ++i) {
      int64_t off = report_offsets[i];
      if (off < 0) continue;
      if (off >= static_cast<int64_t>(records.size()))
        throw DataError("slide '" + ds.slides[i].id + "' references report record " +
                        std::to_string(off) + " but " + rp + " holds " +
                        std::to_string(records.size()) + " records");
      const auto& [rid, vec] = records[static_cast<size_t>(off)];
      if (rid != ds.slides[i].id)
        throw DataError("report record " + std::to_string(off) + " is for slide '" + rid +
                        "', manifest attaches it to '" + ds.slides[i].id + "'");
      double norm = 0.0;
      for (float x : vec) norm += static_cast<double>(x) * x;
      norm = std::sqrt(norm);
      if (std::abs(norm - 1.0) > 1e-3)
        throw DataError("report embedding for slide '" + rid + "' has norm " +
                        std::to_string(norm) + ", expected unit length");
      ds.slides[i].report.t = vec;
      ds.slides[i].report.present = true;
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  std::unordered_map<int, std::vector<size_t>> by_label;
  for (size_t i = 0; i < ds.slides.size(); ++i) by_label[ds.slides[i].label].push_back(i);
  for (const auto& [label, idx] : by_label)
    if (idx.size() < 2)
      throw DataError("class " + std::to_string(label) + " has " +
                      std::to_string(idx.size()) + " slide(s); splitting needs at least 2");

  std::vector<int> labels;
  labels.reserve(by_label.size());
  for (const auto& [label, idx] : by_label) labels.push_back(label);
  std::sort(labels.begin(), labels.end());

  // largest-remainder allocation of the global train count across classes
  int64_t target = std::llround(train_fraction * static_cast<double>(ds.slides.size()));
  std::vector<int64_t> take(labels.size(), 0);
  std::vector<std::pair<double, size_t>> rem;
  int64_t base_total = 0;
  for (size_t c = 0; c < labels.size(); ++c) {
    double want = train_fraction * static_cast<double>(by_label[labels[c]].size());
    take[c] = static_cast<int64_t>(std::floor(want));
    base_total += take[c];
    rem.push_back({want - std::floor(want), c});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  int64_t extra = target - base_total;
  for (size_t i = 0; extra > 0 && i < rem.size(); ++i, --extra)
    take[rem[i].second] += 1;

  Rng rng = Rng(seed).stream("split");
  Dataset train, test;
  train.input_dim = test.input_dim = ds.input_dim;
  train.num_classes = test.num_classes = ds.num_classes;
  for (size_t c = 0; c < labels.size(); ++c) {
    auto idx = by_label[labels[c]];
    rng.shuffle(idx);
    int64_t n = static_cast<int64_t>(idx.size());
    int64_t k = std::clamp<int64_t>(take[c], 1, n - 1);
    for (int64_t i = 0; i < n; ++i) {
      const Dataset::Slide& s = ds.slides[idx[static_cast<size_t>(i)]];
      (i < k ? train : test).slides.push_back(s);
    }
  }
  return {std::move(train), std::move(test)};
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  if (ds.slides.empty()) throw DataError("refusing to write an empty dataset");
  fs::create_directories(fs::path(dir) / "tiles");

  std::vector<std::pair<std::string, std::vector<float>>> reports;
  std::ostringstream manifest;
  manifest << "dims " << ds.input_dim << " " << ds.num_classes << "\n";
  for (size_t i = 0; i < ds.slides.size(); ++i) {
    const Dataset::Slide& s = ds.slides[i];
    std::string rel = "tiles/" + s.id + ".drsb";
    write_tile_file((fs::path(dir) / rel).string(), s.id, ds.tiles(i));
    manifest << "slide " << s.id << " " << s.label << " " << rel;
    if (s.report.present) {
      manifest << " " << reports.size();
      reports.push_back({s.id, s.report.t});
    }
    manifest << "\n";
  }
  if (!reports.empty()) write_reports((fs::path(dir) / "reports.drst").string(), reports);
  atomic_write_file((fs::path(dir) / "manifest.txt").string(), manifest.str());
}

}  // namespace drsl
