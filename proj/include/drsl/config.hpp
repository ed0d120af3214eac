#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drsl/encoder.hpp"
#include "drsl/slide_head.hpp"
#include "drsl/trainer.hpp"

namespace drsl {

// Flat run configuration: dataset paths, model dims and optimization knobs
// in one key=value namespace. File values come first, flag overrides win.
// echo() emits a canonical config file that reproduces the resolved state.
struct RunConfig {
  std::string manifest;
  std::string reports;  // empty: reports.drst next to the manifest
  std::string out_dir = "out";
  std::string precision = "f64";  // f32 | f64 scalar width for training

  int64_t input_dim = 32;
  std::vector<int64_t> hidden_dims{64, 64};
  int64_t feature_dim = 16;
  std::string activation = "gelu";  // gelu | relu

  int64_t head_layers = 1;
  int64_t head_heads = 1;
  int64_t ff_hidden = 0;   // 0 picks 4*feature_dim
  int64_t cls_hidden = 0;  // 0 picks feature_dim
  int64_t report_dim = 16;
  int64_t num_classes = 2;

  TrainConfig train;

  void validate() const;
};

// every key echo() emits, in canonical order
std::vector<std::string> config_keys();

// single key assignment from text; unknown key or unparsable value -> UsageError
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const RunConfig& cfg, const std::string& key);

// one `key = value` per line, `#` comments and blank lines ignored
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);

std::string echo(const RunConfig& cfg);

EncoderConfig encoder_config(const RunConfig& cfg);
SlideHeadConfig head_config(const RunConfig& cfg);

}  // namespace drsl
