#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drsl/binding.hpp"
#include "drsl/graph.hpp"
#include "drsl/rng.hpp"

namespace drsl {

struct SlideHeadConfig {
  int64_t k = 64;           // tokens = codebook clusters
  int64_t d = 16;           // token dim = feature dim
  int64_t report_dim = 16;  // projection target t
  int64_t num_classes = 2;
  int64_t n_layers = 1;
  int64_t n_heads = 1;
  int64_t ff_hidden = 0;   // 0 -> 4*d
  int64_t cls_hidden = 0;  // 0 -> d

  int64_t ff_dim() const { return ff_hidden > 0 ? ff_hidden : 4 * d; }
  int64_t cls_dim() const { return cls_hidden > 0 ? cls_hidden : d; }
  void validate() const;
};

template <typename T>
struct AttnLayerParams {
  Tensor<T> ln1_g, ln1_b;
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> ln2_g, ln2_b;
  Tensor<T> ff1_w, ff1_b, ff2_w, ff2_b;
};

// Pre-norm self-attention stack over the K residual blocks, mean pooling,
// a bias-free projection into report space, and a one-hidden-layer classifier.
template <typename T>
struct SlideHeadParams {
  std::vector<AttnLayerParams<T>> layers;
  Tensor<T> w_proj;                      // d x report_dim
  Tensor<T> cls_w1, cls_b1, cls_w2, cls_b2;
};

template <typename T>
SlideHeadParams<T> init_slide_head(const SlideHeadConfig& cfg, Rng& rng);

template <typename T>
void for_each_param(SlideHeadParams<T>& p,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn);

template <typename T>
struct AttnLayerVars {
  Var ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b;
  Var ff1_w, ff1_b, ff2_w, ff2_b;
};

template <typename T>
struct SlideHeadVars {
  std::vector<AttnLayerVars<T>> layers;
  Var w_proj;
  Var cls_w1, cls_b1, cls_w2, cls_b2;
};

template <typename T>
SlideHeadVars<T> bind_slide_head(Graph<T>& g, SlideHeadParams<T>& p, Binding<T>* binding);

// gradient-free variant; binds every tensor as a constant
template <typename T>
SlideHeadVars<T> bind_slide_head(Graph<T>& g, const SlideHeadParams<T>& p);

struct SlideEmbed {
  Var h;       // [1 x d] pooled token mean
  Var h_proj;  // [1 x report_dim], unit norm
};

// flat [K*d] residual descriptor -> pooled slide embedding
template <typename T>
SlideEmbed enhance(Graph<T>& g, const SlideHeadVars<T>& vars,
                   const SlideHeadConfig& cfg, Var flat);

// [1 x d] -> raw logits [1 x num_classes]
template <typename T>
Var classify(Graph<T>& g, const SlideHeadVars<T>& vars,
             const SlideHeadConfig& cfg, Var h);

}  // namespace drsl
