#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drsl/binding.hpp"
#include "drsl/graph.hpp"

namespace drsl {

// Two independent trainable temperatures in log space, one per direction,
// so positivity holds by construction. sigma = exp(log_sigma), initialized
// to 1/0.07.
template <typename T>
struct TemperaturePair {
  Tensor<T> log_sigma1;  // shape {1}
  Tensor<T> log_sigma2;
};

template <typename T>
TemperaturePair<T> init_temperatures();

template <typename T>
void for_each_param(TemperaturePair<T>& p,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn);

template <typename T>
struct TempVars {
  Var log_sigma1;
  Var log_sigma2;
};

template <typename T>
TempVars<T> bind_temperatures(Graph<T>& g, TemperaturePair<T>& p, Binding<T>* binding);

struct SimilarityPair {
  Var s_str;  // sigma1 * V T^t, [N x N]
  Var s_rts;  // sigma2 * T V^t, [N x N]
};

// V: [N x t] projected slide embeddings (unit rows); reports: [N x t]
// constant report embeddings (rows of absent reports are ignored later)
template <typename T>
SimilarityPair similarity_matrices(Graph<T>& g, Var v, Var reports,
                                   const TempVars<T>& temps);

// Mean of the two directional cross-entropies over slides with reports.
// Default drops masked slides as anchors AND as candidates; with
// keep_negatives, masked slides stay in the candidate pool of the unmasked
// anchors. No masked slide at all yields a constant zero.
template <typename T>
Var contrastive_loss(Graph<T>& g, const SimilarityPair& sims,
                     const std::vector<bool>& mask, bool keep_negatives = false);

}  // namespace drsl
