#include "drsl/kernels.hpp"

#include <cmath>

namespace drsl::kernels {

namespace {
// below this many output elements the omp fork costs more than the loop
constexpr int64_t kParallelCutoff = 4096;

template <typename T>
inline T dot_strided(const T* x, int64_t x_stride, const T* y, int64_t y_stride,
                     int64_t n) {
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) {
    acc += x[i * x_stride] * y[i * y_stride];
  }
  return acc;
}
}  // namespace

template <typename T>
void matmul_serial(const T* a, const T* b, T* c, int64_t m, int64_t k,
                   int64_t n, bool trans_a, bool trans_b) {
  const int64_t a_row = trans_a ? 1 : k;  // stride between rows of op(A)
  const int64_t a_col = trans_a ? m : 1;  // stride along a row of op(A)
  const int64_t b_row = trans_b ? 1 : n;
  const int64_t b_col = trans_b ? k : 1;
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      c[i * n + j] = dot_strided(a + i * a_row, a_col, b + j * b_col, b_row, k);
    }
  }
}

template <typename T>
void matmul(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
            bool trans_a, bool trans_b) {
  if (m * n * k < kParallelCutoff) {
    matmul_serial(a, b, c, m, k, n, trans_a, trans_b);
    return;
  }
  const int64_t a_row = trans_a ? 1 : k;
  const int64_t a_col = trans_a ? m : 1;
  const int64_t b_row = trans_b ? 1 : n;
  const int64_t b_col = trans_b ? k : 1;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      c[i * n + j] = dot_strided(a + i * a_row, a_col, b + j * b_col, b_row, k);
    }
  }
}

double squared_distance(const double* x, const double* y, int64_t dim) {
  double acc = 0.0;
  for (int64_t i = 0; i < dim; ++i) {
    double diff = x[i] - y[i];
    acc += diff * diff;
  }
  return acc;
}

namespace {
inline int nearest_one(const double* p, const double* centroids, int64_t k,
                       int64_t dim) {
  int best = 0;
  double best_d = squared_distance(p, centroids, dim);
  for (int64_t j = 1; j < k; ++j) {
    double d = squared_distance(p, centroids + j * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = int(j);
    }
  }
  return best;
}
}  // namespace

void nearest_centroid_serial(const double* points, int64_t count,
                             const double* centroids, int64_t k, int64_t dim,
                             int* out_assign) {
  for (int64_t i = 0; i < count; ++i) {
    out_assign[i] = nearest_one(points + i * dim, centroids, k, dim);
  }
}

void nearest_centroid(const double* points, int64_t count,
                      const double* centroids, int64_t k, int64_t dim,
                      int* out_assign) {
  if (count * k * dim < kParallelCutoff) {
    nearest_centroid_serial(points, count, centroids, k, dim, out_assign);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < count; ++i) {
    out_assign[i] = nearest_one(points + i * dim, centroids, k, dim);
  }
}

template <typename T>
void l2_normalize_rows_serial(T* data, int64_t rows, int64_t cols, T eps) {
  for (int64_t r = 0; r < rows; ++r) {
    T* row = data + r * cols;
    T sq = T(0);
    for (int64_t j = 0; j < cols; ++j) sq += row[j] * row[j];
    T norm = std::sqrt(sq);
    if (norm > eps) {
      for (int64_t j = 0; j < cols; ++j) row[j] /= norm;
    }
  }
}

template <typename T>
void l2_normalize_rows(T* data, int64_t rows, int64_t cols, T eps) {
  if (rows * cols < kParallelCutoff) {
    l2_normalize_rows_serial(data, rows, cols, eps);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    T* row = data + r * cols;
    T sq = T(0);
    for (int64_t j = 0; j < cols; ++j) sq += row[j] * row[j];
    T norm = std::sqrt(sq);
    if (norm > eps) {
      for (int64_t j = 0; j < cols; ++j) row[j] /= norm;
    }
  }
}

template void matmul_serial<float>(const float*, const float*, float*, int64_t,
                                   int64_t, int64_t, bool, bool);
template void matmul_serial<double>(const double*, const double*, double*,
                                    int64_t, int64_t, int64_t, bool, bool);
template void matmul<float>(const float*, const float*, float*, int64_t,
                            int64_t, int64_t, bool, bool);
template void matmul<double>(const double*, const double*, double*, int64_t,
                             int64_t, int64_t, bool, bool);
template void l2_normalize_rows_serial<float>(float*, int64_t, int64_t, float);
template void l2_normalize_rows_serial<double>(double*, int64_t, int64_t,
                                               double);
template void l2_normalize_rows<float>(float*, int64_t, int64_t, float);
template void l2_normalize_rows<double>(double*, int64_t, int64_t, double);

}  // namespace drsl::kernels
