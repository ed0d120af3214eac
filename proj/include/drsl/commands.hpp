#pragma once

#include <iosfwd>
#include <string>

#include "drsl/config.hpp"
#include "drsl/data.hpp"

namespace drsl {

// artifact locations under cfg.out_dir
std::string bank_path(const RunConfig& cfg);        // preparation-time bank
std::string bank_state_path(const RunConfig& cfg);  // bank as training left it
std::string codebook_path(const RunConfig& cfg);
std::string checkpoint_path(const RunConfig& cfg);
std::string config_echo_path(const RunConfig& cfg);

struct SynthArgs {
  SyntheticSpec spec;
  std::string out_dir;
  double train_fraction = 0.0;  // >0 also writes train/ and test/ subsets
};

// writes manifest.txt, tiles/ and reports.drst; optional stratified subsets
void run_synth(const SynthArgs& args);

// encodes every tile with the freshly initialized encoder, fits the
// codebook, writes bank + codebook + resolved config
void run_prepare(const RunConfig& cfg);

// trains to cfg.train.epochs, one metrics JSON line per epoch on `out`;
// persists checkpoint and bank after every epoch and resumes from an
// existing checkpoint when the rest of the config matches
void run_train(const RunConfig& cfg, std::ostream& out);

// evaluates the trained checkpoint on cfg.manifest; one JSON line on `out`
void run_eval(const RunConfig& cfg, std::ostream& out);

// writes per-slide residual descriptors for cfg.manifest to output_path
// (empty: descriptors.drsv under out_dir)
void run_encode(const RunConfig& cfg, const std::string& output_path);

}  // namespace drsl
