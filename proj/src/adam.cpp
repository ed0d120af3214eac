#include "drsl/adam.hpp"

#include <cmath>

#include "drsl/errors.hpp"

namespace drsl {

template <typename T>
typename Adam<T>::Moments& Adam<T>::slot(const std::string& key,
                                         const std::vector<int64_t>& shape) {
  auto it = slots_.find(key);
  if (it == slots_.end()) {
    Moments mo;
    mo.m = Tensor<T>::zeros(shape);
    mo.v = Tensor<T>::zeros(shape);
    it = slots_.emplace(key, std::move(mo)).first;
  } else if (it->second.m.shape != shape) {
    throw DimensionError("optimizer slot '" + key + "' holds " +
                         it->second.m.shape_str() + ", parameter is now " +
                         Tensor<T>::zeros(shape).shape_str());
  }
  return it->second;
}

template <typename T>
void Adam<T>::step(const std::string& key, Tensor<T>& param,
                   const Tensor<T>& grad, bool decay) {
  if (!param.same_shape(grad)) {
    throw DimensionError("adam step '" + key + "': gradient " + grad.shape_str() +
                         " vs parameter " + param.shape_str());
  }
  Moments& mo = slot(key, param.shape);
  mo.t += 1;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, double(mo.t));
  const double bc2 = 1.0 - std::pow(b2, double(mo.t));
  for (size_t i = 0; i < param.data.size(); ++i) {
    double gi = double(grad.data[i]);
    double m = b1 * double(mo.m.data[i]) + (1.0 - b1) * gi;
    double v = b2 * double(mo.v.data[i]) + (1.0 - b2) * gi * gi;
    mo.m.data[i] = T(m);
    mo.v.data[i] = T(v);
    double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
    if (decay) update += cfg_.weight_decay * double(param.data[i]);
    param.data[i] = T(double(param.data[i]) - cfg_.lr * update);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace drsl
