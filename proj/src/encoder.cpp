#include "drsl/encoder.hpp"

#include <cmath>

namespace drsl {

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "gelu") return Activation::kGelu;
  throw ConfigError("unknown activation '" + s + "' (expected relu or gelu)");
}

const char* activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "gelu";
}

void EncoderConfig::validate() const {
  if (input_dim < 1) throw ConfigError("encoder input_dim must be positive");
  if (feature_dim < 2) throw ConfigError("encoder feature_dim must be >= 2");
  if (hidden_dims.empty()) {
    throw ConfigError("encoder needs at least one hidden layer");
  }
  for (int64_t h : hidden_dims) {
    if (h < 1) throw ConfigError("encoder hidden dims must be positive");
  }
}

namespace {

template <typename T>
Tensor<T> fan_uniform(Rng& rng, int64_t fan_in, int64_t fan_out) {
  double s = std::sqrt(6.0 / double(fan_in + fan_out));
  Tensor<T> w = Tensor<T>::zeros({fan_in, fan_out});
  for (auto& v : w.data) v = T(rng.uniform(-s, s));
  w.requires_grad = true;
  return w;
}

}  // namespace

template <typename T>
EncoderParams<T> init_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<int64_t> dims;
  dims.push_back(cfg.input_dim);
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.feature_dim);

  EncoderParams<T> p;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    p.weights.push_back(fan_uniform<T>(rng, dims[l], dims[l + 1]));
    Tensor<T> b = Tensor<T>::zeros({dims[l + 1]});
    b.requires_grad = true;
    p.biases.push_back(std::move(b));
  }
  return p;
}

template <typename T>
void set_frozen(EncoderParams<T>& p, bool frozen) {
  p.frozen = frozen;
  for (auto& w : p.weights) w.requires_grad = !frozen;
  for (auto& b : p.biases) b.requires_grad = !frozen;
}

template <typename T>
void for_each_param(EncoderParams<T>& p,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  for (size_t l = 0; l < p.weights.size(); ++l) {
    fn("encoder.w" + std::to_string(l), p.weights[l]);
    fn("encoder.b" + std::to_string(l), p.biases[l]);
  }
}

template <typename T>
EncoderVars<T> bind_encoder(Graph<T>& g, EncoderParams<T>& p, Binding<T>* binding) {
  EncoderVars<T> vars;
  for (size_t l = 0; l < p.weights.size(); ++l) {
    std::string tag = std::to_string(l);
    if (binding) {
      vars.weights.push_back(binding->bind(g, "encoder.w" + tag, p.weights[l]));
      vars.biases.push_back(binding->bind(g, "encoder.b" + tag, p.biases[l]));
    } else {
      vars.weights.push_back(g.input(p.weights[l]));
      vars.biases.push_back(g.input(p.biases[l]));
    }
  }
  return vars;
}

template <typename T>
Var encode(Graph<T>& g, const EncoderVars<T>& vars, const EncoderConfig& cfg, Var tiles) {
  const auto& t = g.value(tiles);
  if (t.rank() != 2 || t.shape[1] != cfg.input_dim) {
    throw ConfigError("encode: tiles " + t.shape_str() + " do not match input_dim " +
                      std::to_string(cfg.input_dim));
  }
  Var x = tiles;
  size_t layers = vars.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    x = g.add_bias(g.matmul(x, vars.weights[l]), vars.biases[l]);
    if (l + 1 < layers) {
      x = cfg.activation == Activation::kRelu ? g.relu(x) : g.gelu(x);
    }
  }
  return g.l2_normalize_rows(x);
}

template <typename T>
Var encode(Graph<T>& g, const EncoderParams<T>& p, const EncoderConfig& cfg, Var tiles) {
  EncoderVars<T> vars;
  for (size_t l = 0; l < p.weights.size(); ++l) {
    vars.weights.push_back(g.constant(p.weights[l]));
    vars.biases.push_back(g.constant(p.biases[l]));
  }
  return encode(g, vars, cfg, tiles);
}

template EncoderParams<float> init_encoder<float>(const EncoderConfig&, Rng&);
template EncoderParams<double> init_encoder<double>(const EncoderConfig&, Rng&);
template void set_frozen<float>(EncoderParams<float>&, bool);
template void set_frozen<double>(EncoderParams<double>&, bool);
template void for_each_param<float>(
    EncoderParams<float>&, const std::function<void(const std::string&, Tensor<float>&)>&);
template void for_each_param<double>(
    EncoderParams<double>&, const std::function<void(const std::string&, Tensor<double>&)>&);
template EncoderVars<float> bind_encoder<float>(GraphF&, EncoderParams<float>&, Binding<float>*);
template EncoderVars<double> bind_encoder<double>(GraphD&, EncoderParams<double>&, Binding<double>*);
template Var encode<float>(GraphF&, const EncoderVars<float>&, const EncoderConfig&, Var);
template Var encode<double>(GraphD&, const EncoderVars<double>&, const EncoderConfig&, Var);
template Var encode<float>(GraphF&, const EncoderParams<float>&, const EncoderConfig&, Var);
template Var encode<double>(GraphD&, const EncoderParams<double>&, const EncoderConfig&, Var);

}  // namespace drsl
