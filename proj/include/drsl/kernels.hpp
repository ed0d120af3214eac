#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace drsl::kernels {

// Dense inner loops shared by the autodiff graph, k-means, and the residual
// encoder. Each kernel has an OpenMP variant (the production path) and a
// serial reference. Parallel loops only ever split independent output rows,
// so both variants are bit-identical for any thread count; tests assert that
// and the bench target compares their throughput.

// C[m x n] = op(A) * op(B), row-major. trans_a/trans_b select A^T / B^T
// without materializing the transpose. A is (m x k) after op, B is (k x n).
template <typename T>
void matmul_serial(const T* a, const T* b, T* c, int64_t m, int64_t k,
                   int64_t n, bool trans_a, bool trans_b);

template <typename T>
void matmul(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
            bool trans_a = false, bool trans_b = false);

// For each row of `points` (count x dim), the index of the nearest centroid
// (k x dim) under Euclidean distance; ties break to the lowest index.
void nearest_centroid_serial(const double* points, int64_t count,
                             const double* centroids, int64_t k, int64_t dim,
                             int* out_assign);

void nearest_centroid(const double* points, int64_t count,
                      const double* centroids, int64_t k, int64_t dim,
                      int* out_assign);

// Squared Euclidean distance from one point to one centroid.
double squared_distance(const double* x, const double* y, int64_t dim);

// Row-wise L2 normalization in place; rows with norm <= eps pass through.
template <typename T>
void l2_normalize_rows_serial(T* data, int64_t rows, int64_t cols, T eps);

template <typename T>
void l2_normalize_rows(T* data, int64_t rows, int64_t cols, T eps);

}  // namespace drsl::kernels
