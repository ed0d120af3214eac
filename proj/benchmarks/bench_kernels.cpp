#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "drsl/kernels.hpp"
#include "drsl/rng.hpp"

using namespace drsl;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm cache and threads
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const std::string& name, double serial_s, double parallel_s) {
  std::printf("%-34s %10.3f ms %10.3f ms %8.2fx\n", name.c_str(), serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s);
}

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n, 0.0);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

int main() {
  Rng rng(123);
  std::printf("%-34s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  {
    const int64_t m = 256, k = 384, n = 256;
    auto a = random_vec(size_t(m * k), rng);
    auto b = random_vec(size_t(k * n), rng);
    std::vector<double> c(size_t(m * n), 0.0);
    double ts = time_of(
        [&] { kernels::matmul_serial(a.data(), b.data(), c.data(), m, k, n, false, false); },
        5);
    double tp = time_of(
        [&] { kernels::matmul(a.data(), b.data(), c.data(), m, k, n, false, false); }, 5);
    report("matmul 256x384x256", ts, tp);
  }

  {
    const int64_t m = 256, k = 384, n = 256;
    auto a = random_vec(size_t(k * m), rng);
    auto b = random_vec(size_t(k * n), rng);
    std::vector<double> c(size_t(m * n), 0.0);
    double ts = time_of(
        [&] { kernels::matmul_serial(a.data(), b.data(), c.data(), m, k, n, true, false); },
        5);
    double tp = time_of(
        [&] { kernels::matmul(a.data(), b.data(), c.data(), m, k, n, true, false); }, 5);
    report("matmul A^T 256x384x256", ts, tp);
  }

  {
    const int64_t count = 20000, k = 64, dim = 64;
    auto points = random_vec(size_t(count * dim), rng);
    auto centroids = random_vec(size_t(k * dim), rng);
    std::vector<int> assign(size_t(count), 0);
    double ts = time_of(
        [&] {
          kernels::nearest_centroid_serial(points.data(), count, centroids.data(), k,
                                           dim, assign.data());
        },
        5);
    double tp = time_of(
        [&] {
          kernels::nearest_centroid(points.data(), count, centroids.data(), k, dim,
                                    assign.data());
        },
        5);
    report("nearest_centroid 20k x 64 @ 64d", ts, tp);
  }

  {
    const int64_t rows = 20000, cols = 384;
    auto base = random_vec(size_t(rows * cols), rng);
    auto work = base;
    double ts = time_of(
        [&] {
          work = base;
          kernels::l2_normalize_rows_serial(work.data(), rows, cols, 1e-12);
        },
        5);
    double tp = time_of(
        [&] {
          work = base;
          kernels::l2_normalize_rows(work.data(), rows, cols, 1e-12);
        },
        5);
    report("l2_normalize 20k x 384", ts, tp);
  }

  return 0;
}
