#include "drsl/contrastive.hpp"

#include <cmath>

namespace drsl {

template <typename T>
TemperaturePair<T> init_temperatures() {
  TemperaturePair<T> p;
  const T init = T(std::log(1.0 / 0.07));
  p.log_sigma1 = Tensor<T>::scalar(init);
  p.log_sigma1.requires_grad = true;
  p.log_sigma2 = Tensor<T>::scalar(init);
  p.log_sigma2.requires_grad = true;
  return p;
}

template <typename T>
void for_each_param(TemperaturePair<T>& p,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  fn("temp.log_sigma1", p.log_sigma1);
  fn("temp.log_sigma2", p.log_sigma2);
}

template <typename T>
TempVars<T> bind_temperatures(Graph<T>& g, TemperaturePair<T>& p, Binding<T>* binding) {
  TempVars<T> vars;
  if (binding) {
    vars.log_sigma1 = binding->bind(g, "temp.log_sigma1", p.log_sigma1);
    vars.log_sigma2 = binding->bind(g, "temp.log_sigma2", p.log_sigma2);
  } else {
    vars.log_sigma1 = g.input(p.log_sigma1);
    vars.log_sigma2 = g.input(p.log_sigma2);
  }
  return vars;
}

template <typename T>
SimilarityPair similarity_matrices(Graph<T>& g, Var v, Var reports,
                                   const TempVars<T>& temps) {
  const auto& tv = g.value(v);
  const auto& tr = g.value(reports);
  if (tv.rank() != 2 || tr.rank() != 2 || tv.shape != tr.shape) {
    throw DimensionError("similarity: embeddings " + tv.shape_str() +
                         " vs reports " + tr.shape_str());
  }
  SimilarityPair out;
  out.s_str = g.mul_scalar(g.matmul(v, g.transpose(reports)), g.exp(temps.log_sigma1));
  out.s_rts = g.mul_scalar(g.matmul(reports, g.transpose(v)), g.exp(temps.log_sigma2));
  return out;
}

template <typename T>
Var contrastive_loss(Graph<T>& g, const SimilarityPair& sims,
                     const std::vector<bool>& mask, bool keep_negatives) {
  const auto& s = g.value(sims.s_str);
  const int64_t n = s.rows();
  if (s.rank() != 2 || s.shape[0] != s.shape[1] ||
      g.value(sims.s_rts).shape != s.shape) {
    throw DimensionError("contrastive_loss: similarity matrices must be square and equal, got " +
                         s.shape_str() + " and " + g.value(sims.s_rts).shape_str());
  }
  if (int64_t(mask.size()) != n) {
    throw DimensionError("contrastive_loss: mask length " + std::to_string(mask.size()) +
                         " vs batch " + std::to_string(n));
  }
  std::vector<int> present;
  for (int64_t i = 0; i < n; ++i) {
    if (mask[size_t(i)]) present.push_back(int(i));
  }
  if (present.empty()) return g.constant(Tensor<T>::scalar(T(0)));

  std::vector<int> reduced_targets(present.size());
  for (size_t i = 0; i < present.size(); ++i) reduced_targets[i] = int(i);

  auto keep_rows_and_cols = [&](Var m) {
    Var rows = g.select_rows(m, present);
    return g.transpose(g.select_rows(g.transpose(rows), present));
  };

  // slide -> report: candidate pool is always the present reports
  Var l_str = g.cross_entropy_rows(keep_rows_and_cols(sims.s_str), reduced_targets);

  // report -> slide: candidates are slides, which all exist
  Var l_rts;
  if (keep_negatives) {
    l_rts = g.cross_entropy_rows(g.select_rows(sims.s_rts, present), present);
  } else {
    l_rts = g.cross_entropy_rows(keep_rows_and_cols(sims.s_rts), reduced_targets);
  }
  return g.scale(g.add(l_str, l_rts), T(0.5));
}

template TemperaturePair<float> init_temperatures<float>();
template TemperaturePair<double> init_temperatures<double>();
template void for_each_param<float>(
    TemperaturePair<float>&, const std::function<void(const std::string&, Tensor<float>&)>&);
template void for_each_param<double>(
    TemperaturePair<double>&, const std::function<void(const std::string&, Tensor<double>&)>&);
template TempVars<float> bind_temperatures<float>(GraphF&, TemperaturePair<float>&, Binding<float>*);
template TempVars<double> bind_temperatures<double>(GraphD&, TemperaturePair<double>&, Binding<double>*);
template SimilarityPair similarity_matrices<float>(GraphF&, Var, Var, const TempVars<float>&);
template SimilarityPair similarity_matrices<double>(GraphD&, Var, Var, const TempVars<double>&);
template Var contrastive_loss<float>(GraphF&, const SimilarityPair&, const std::vector<bool>&, bool);
template Var contrastive_loss<double>(GraphD&, const SimilarityPair&, const std::vector<bool>&, bool);

}  // namespace drsl
