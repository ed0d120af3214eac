#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace drsl {

struct ReportEmbedding {
  std::vector<float> t;  // unit-norm when present
  bool present = false;
};

// Class-structured synthetic slides: each class owns an orthonormal signal
// direction in tile space and another in report space; a fraction rho of a
// slide's tiles carries the class signal, the rest is shared background.
struct SyntheticSpec {
  int num_classes = 2;
  int slides_per_class = 20;
  int tiles_min = 25;
  int tiles_max = 40;
  int64_t input_dim = 32;
  double class_signal_fraction = 0.3;  // rho in (0, 1]
  double noise_scale = 0.25;
  int64_t report_dim = 16;
  double report_noise = 0.1;
  uint64_t seed = 0;

  void validate() const;
};

struct Dataset {
  struct Slide {
    std::string id;
    int label = 0;
    std::string tile_file;  // empty when tiles live in memory
    std::vector<std::vector<float>> tiles;
    int64_t tile_count = 0;
    ReportEmbedding report;
  };

  int64_t input_dim = 0;
  int num_classes = 0;
  std::vector<Slide> slides;

  size_t size() const { return slides.size(); }
  // raw tile vectors of one slide; file-backed slides are read on demand
  std::vector<std::vector<float>> tiles(size_t slide_idx) const;
};

Dataset generate(const SyntheticSpec& spec);

// manifest: `dims <input_dim> <num_classes>` header, then per slide
// `slide <id> <label> <tile_file> [<report_record_index>]`. Tile paths are
// relative to the manifest. reports_path defaults to reports.drst next to
// the manifest when any slide references a report record.
Dataset load_manifest(const std::string& manifest_path,
                      const std::string& reports_path = "");

// stratified by label; every class needs at least 2 slides
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  uint64_t seed);

// writes manifest.txt, tiles/<id>.drsb and reports.drst under dir
void write_dataset(const Dataset& ds, const std::string& dir);

// single-slide tile container (bank record layout)
void write_tile_file(const std::string& path, const std::string& slide_id,
                     const std::vector<std::vector<float>>& tiles);
std::pair<std::string, std::vector<std::vector<float>>> read_tile_file(
    const std::string& path);

// report embeddings: magic "DRST", u32 t_dim, u64 count, then
// length-prefixed id + t_dim f32 per record
void write_reports(const std::string& path,
                   const std::vector<std::pair<std::string, std::vector<float>>>& records);
std::vector<std::pair<std::string, std::vector<float>>> read_reports(
    const std::string& path);

}  // namespace drsl
