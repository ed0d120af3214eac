#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "drsl/adam.hpp"
#include "drsl/codebook.hpp"
#include "drsl/contrastive.hpp"
#include "drsl/data.hpp"
#include "drsl/encoder.hpp"
#include "drsl/memory_bank.hpp"
#include "drsl/metrics.hpp"
#include "drsl/rng.hpp"
#include "drsl/slide_head.hpp"
#include "drsl/vlad.hpp"

namespace drsl {

struct TrainConfig {
  int batch_size = 64;
  int tiles_per_slide = 10;  // r; slides with fewer tiles contribute all
  int epochs = 100;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int freeze_epochs = 10;    // stage 1: encoder parameters held fixed
  double loss_weight = 1.0;  // lambda on the contrastive term
  uint64_t seed = 0;
  int codebook_k = 64;
  int kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool keep_masked_negatives = false;
  bool intra_normalize = false;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  int stage = 1;  // 1 while the encoder is frozen, 2 afterwards
  double loss_total = 0.0;
  double loss_cls = 0.0;
  double loss_contrastive = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double wall_time_s = 0.0;
};

template <typename T>
struct TrainState {
  EncoderConfig enc_cfg;
  SlideHeadConfig head_cfg;
  TrainConfig cfg;
  EncoderParams<T> encoder;
  SlideHeadParams<T> head;
  TemperaturePair<T> temps;
  Adam<T> adam;
  int epoch = 0;
  Rng rng{0};  // training stream, consumed across epochs

  int stage() const { return epoch < cfg.freeze_epochs ? 1 : 2; }
};

template <typename T>
void for_each_param(TrainState<T>& s,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn);

// validates configs jointly (feature dim vs token dim, codebook vs head K)
// and initializes parameters from the seed's init stream
template <typename T>
TrainState<T> init_state(const EncoderConfig& enc_cfg, const SlideHeadConfig& head_cfg,
                         const TrainConfig& cfg);

// preparation stage: encode every tile of every slide with the current
// encoder, fill the bank, then fit the codebook over all bank features
template <typename T>
std::pair<MemoryBank, Codebook> prepare(const TrainState<T>& state, const Dataset& ds);

// one pass over the shuffled training slides in batches; samples r tiles per
// slide, refreshes their bank entries, and takes one Adam step per batch
template <typename T>
EpochMetrics train_epoch(TrainState<T>& state, MemoryBank& bank, const Codebook& cb,
                         const Dataset& ds);

template <typename T>
std::vector<EpochMetrics> train_epochs(
    TrainState<T>& state, MemoryBank& bank, const Codebook& cb, const Dataset& ds,
    int epochs, const std::function<void(const EpochMetrics&)>& on_epoch = nullptr);

// testing stage: every tile encoded fresh, one slide per pass, no sampling
// and no bank. Binary tasks report positive-class AUC, multiclass tasks the
// one-vs-rest macro average.
template <typename T>
EvalResult evaluate(const TrainState<T>& state, const Codebook& cb, const Dataset& ds);

// checkpoint: magic "DRSK", configs, epoch, RNG state, named parameter
// tensors with Adam moments, trailing CRC-64. config_echo carries the
// caller's flat config text for provenance.
template <typename T>
void save_checkpoint(TrainState<T>& state, const std::string& path,
                     const std::string& config_echo = "");

template <typename T>
TrainState<T> load_checkpoint(const std::string& path,
                              std::string* config_echo_out = nullptr);

// element width (4 or 8) recorded in a checkpoint header, for dispatch
int checkpoint_precision(const std::string& path);

}  // namespace drsl
