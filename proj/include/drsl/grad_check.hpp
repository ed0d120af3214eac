#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drsl/graph.hpp"

namespace drsl {

struct GradCheckReport {
  bool pass = false;
  double worst_rel_err = 0.0;
  size_t worst_param = 0;
  int64_t worst_entry = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::string message;
};

// Central-difference check of backward() against the forward map alone.
// `build` must construct the same scalar expression from whatever leaves it
// is handed; it is re-invoked on a fresh graph per probe. Step size is
// cbrt(eps) scaled by the entry magnitude, error is relative with a unit
// floor, so tolerances transfer across parameter scales.
template <typename T>
GradCheckReport grad_check(
    const std::function<Var(Graph<T>&, const std::vector<Var>&)>& build,
    const std::vector<Tensor<T>>& params, double tol);

}  // namespace drsl
