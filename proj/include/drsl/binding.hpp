#pragma once

#include <string>
#include <vector>

#include "drsl/graph.hpp"

namespace drsl {

// Registry of parameter tensors bound into one graph. Modules append their
// tensors in a fixed order; the trainer walks the slots after backward to
// apply optimizer updates by name. `trainable` snapshots requires_grad at
// bind time, so frozen parameters are skipped without special-casing.
template <typename T>
struct Binding {
  struct Slot {
    std::string name;
    Var var;
    Tensor<T>* tensor;
    bool trainable;
  };
  std::vector<Slot> slots;

  Var bind(Graph<T>& g, const std::string& name, Tensor<T>& t) {
    Var v = g.input(t);
    slots.push_back({name, v, &t, t.requires_grad});
    return v;
  }
};

}  // namespace drsl
