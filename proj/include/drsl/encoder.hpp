#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drsl/binding.hpp"
#include "drsl/graph.hpp"
#include "drsl/rng.hpp"

namespace drsl {

enum class Activation { kRelu, kGelu };

Activation parse_activation(const std::string& s);
const char* activation_name(Activation a);

struct EncoderConfig {
  int64_t input_dim = 32;
  std::vector<int64_t> hidden_dims{64, 64};
  int64_t feature_dim = 16;  // d
  Activation activation = Activation::kGelu;

  void validate() const;
};

// MLP mapping raw tile vectors to unit-norm d-dim features. Layer i maps
// dims[i] -> dims[i+1]; the final layer is linear, followed by row
// normalization. `frozen` mirrors requires_grad on every tensor.
template <typename T>
struct EncoderParams {
  std::vector<Tensor<T>> weights;  // [in x out]
  std::vector<Tensor<T>> biases;   // [out]
  bool frozen = false;
};

// uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)); biases zero
template <typename T>
EncoderParams<T> init_encoder(const EncoderConfig& cfg, Rng& rng);

template <typename T>
void set_frozen(EncoderParams<T>& p, bool frozen);

template <typename T>
void for_each_param(EncoderParams<T>& p,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn);

template <typename T>
struct EncoderVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

template <typename T>
EncoderVars<T> bind_encoder(Graph<T>& g, EncoderParams<T>& p, Binding<T>* binding);

// tiles [n x input_dim] -> features [n x d], every row unit-norm unless the
// pre-normalization row is sub-eps
template <typename T>
Var encode(Graph<T>& g, const EncoderVars<T>& vars, const EncoderConfig& cfg, Var tiles);

// convenience for gradient-free callers; binds params as constants
template <typename T>
Var encode(Graph<T>& g, const EncoderParams<T>& p, const EncoderConfig& cfg, Var tiles);

}  // namespace drsl
