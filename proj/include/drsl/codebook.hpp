#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drsl/tensor.hpp"

namespace drsl {

// K centroids of dimension d, fit once over all bank features and immutable
// afterwards. Centroids are kept in f64 so residuals and assignments do not
// wobble with the training precision.
class Codebook {
 public:
  Codebook(Tensor<double> centroids, int iters_run, double final_inertia);

  int64_t k() const { return centroids_.shape[0]; }
  int64_t dim() const { return centroids_.shape[1]; }
  const Tensor<double>& centroids() const { return centroids_; }
  int iters_run() const { return iters_run_; }
  double final_inertia() const { return final_inertia_; }

  // nearest centroid under Euclidean distance, ties to the lowest index
  int assign(const double* f, int64_t dim) const;
  int assign(const std::vector<float>& f) const;
  std::vector<int> assign_batch(const double* points, int64_t count) const;

  void save(const std::string& path) const;
  static Codebook load(const std::string& path);

 private:
  Tensor<double> centroids_;
  int iters_run_;
  double final_inertia_;
};

struct KMeansOptions {
  int max_iters = 100;
  double tol = 1e-6;  // relative inertia improvement
  uint64_t seed = 0;
};

// Lloyd iterations from a k-means++ seeding. Deterministic given the seed.
// Empty clusters are reseeded to the point currently farthest from its own
// centroid (lowest index on ties). Inertia is asserted non-increasing.
Codebook build_codebook(const std::vector<std::vector<float>>& features,
                        int64_t k, const KMeansOptions& opts);

}  // namespace drsl
