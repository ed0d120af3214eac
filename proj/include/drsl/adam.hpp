#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "drsl/tensor.hpp"

namespace drsl {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

// Adam with decoupled weight decay. Moments live per parameter name and the
// step counter is per parameter, so a tensor that sits out early epochs
// (frozen) starts its bias correction at t=1 when it first receives a
// gradient.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }

  // one update: param -= lr * (m_hat / (sqrt(v_hat) + eps) [+ wd * param])
  void step(const std::string& key, Tensor<T>& param, const Tensor<T>& grad,
            bool decay);

  struct Moments {
    Tensor<T> m;
    Tensor<T> v;
    uint64_t t = 0;
  };

  // creates zeroed moments on first access; used by step and checkpointing
  Moments& slot(const std::string& key, const std::vector<int64_t>& shape);
  bool has_slot(const std::string& key) const { return slots_.count(key) > 0; }
  const std::map<std::string, Moments>& slots() const { return slots_; }
  void restore_slot(const std::string& key, Moments m) { slots_[key] = std::move(m); }

 private:
  AdamConfig cfg_;
  std::map<std::string, Moments> slots_;
};

}  // namespace drsl
