#include "drsl/codebook.hpp"

#include <cmath>

#include "drsl/errors.hpp"
#include "drsl/io_util.hpp"
#include "drsl/kernels.hpp"
#include "drsl/rng.hpp"

namespace drsl {

Codebook::Codebook(Tensor<double> centroids, int iters_run, double final_inertia)
    : centroids_(std::move(centroids)),
      iters_run_(iters_run),
      final_inertia_(final_inertia) {
  if (centroids_.rank() != 2 || centroids_.shape[0] < 2) {
    throw ConfigError("codebook needs at least 2 centroids, got " +
                      centroids_.shape_str());
  }
  if (!centroids_.all_finite()) {
    throw NumericError("codebook centroids contain non-finite values");
  }
}

int Codebook::assign(const double* f, int64_t dim) const {
  if (dim != this->dim()) {
    throw DimensionError("assign: feature length " + std::to_string(dim) +
                         " vs codebook dim " + std::to_string(this->dim()));
  }
  int out = -1;
  kernels::nearest_centroid(f, 1, centroids_.data.data(), k(), dim, &out);
  return out;
}

int Codebook::assign(const std::vector<float>& f) const {
  std::vector<double> tmp(f.begin(), f.end());
  return assign(tmp.data(), int64_t(tmp.size()));
}

std::vector<int> Codebook::assign_batch(const double* points, int64_t count) const {
  std::vector<int> out(size_t(count), -1);
  kernels::nearest_centroid(points, count, centroids_.data.data(), k(), dim(),
                            out.data());
  return out;
}

void Codebook::save(const std::string& path) const {
  ByteWriter w;
  w.magic("DRSC");
  w.u32(1);  // format version
  w.u32(uint32_t(dim()));
  w.u32(uint32_t(k()));
  w.u32(uint32_t(iters_run_));
  w.f64(final_inertia_);
  w.scalar_array(centroids_.data.data(), centroids_.data.size());
  w.finish_with_crc();
  atomic_write_file(path, w.bytes());
}

Codebook Codebook::load(const std::string& path) {
  std::string file = read_file(path);
  ByteReader::check_crc(file, "codebook file " + path);
  ByteReader r(ByteReader::payload_without_crc(file));
  r.expect_magic("DRSC", "codebook file " + path);
  uint32_t version = r.u32();
  if (version != 1) {
    throw FormatError("unsupported codebook format version " + std::to_string(version), 4);
  }
  int64_t d = r.u32();
  int64_t k = r.u32();
  int iters = int(r.u32());
  double inertia = r.f64();
  Tensor<double> c = Tensor<double>::zeros({k, d});
  r.scalar_array(c.data.data(), c.data.size());
  return Codebook(std::move(c), iters, inertia);
}

namespace {

// sum over points of squared distance to their assigned centroid
double total_inertia(const std::vector<double>& pts, int64_t n, int64_t d,
                     const std::vector<double>& centroids,
                     const std::vector<int>& assign) {
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    acc += kernels::squared_distance(pts.data() + i * d,
                                     centroids.data() + int64_t(assign[size_t(i)]) * d, d);
  }
  return acc;
}

// k-means++ : first centroid uniform, then D^2-weighted draws
std::vector<double> seed_centroids(const std::vector<double>& pts, int64_t n,
                                   int64_t d, int64_t k, Rng& rng) {
  std::vector<double> centroids(size_t(k * d), 0.0);
  int64_t first = int64_t(rng.uniform_int(uint64_t(n)));
  std::copy_n(pts.data() + first * d, d, centroids.data());

  std::vector<double> best_d2(size_t(n), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    best_d2[size_t(i)] = kernels::squared_distance(pts.data() + i * d, centroids.data(), d);
  }
  for (int64_t c = 1; c < k; ++c) {
    double total = 0;
    for (double v : best_d2) total += v;
    int64_t pick;
    if (total <= 0) {
      // all mass on already-chosen points: fall back to uniform
      pick = int64_t(rng.uniform_int(uint64_t(n)));
    } else {
      double target = rng.uniform() * total;
      double run = 0;
      pick = n - 1;
      for (int64_t i = 0; i < n; ++i) {
        run += best_d2[size_t(i)];
        if (run >= target) {
          pick = i;
          break;
        }
      }
    }
    std::copy_n(pts.data() + pick * d, d, centroids.data() + c * d);
    for (int64_t i = 0; i < n; ++i) {
      double dd = kernels::squared_distance(pts.data() + i * d, centroids.data() + c * d, d);
      best_d2[size_t(i)] = std::min(best_d2[size_t(i)], dd);
    }
  }
  return centroids;
}

}  // namespace

Codebook build_codebook(const std::vector<std::vector<float>>& features,
                        int64_t k, const KMeansOptions& opts) {
  if (k < 2) throw ConfigError("codebook k must be >= 2, got " + std::to_string(k));
  const int64_t n = int64_t(features.size());
  if (n < k) {
    throw ConfigError("k-means needs at least k=" + std::to_string(k) +
                      " points, got " + std::to_string(n));
  }
  const int64_t d = int64_t(features[0].size());
  std::vector<double> pts(size_t(n * d), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    if (int64_t(features[size_t(i)].size()) != d) {
      throw DimensionError("k-means: feature " + std::to_string(i) + " has length " +
                           std::to_string(features[size_t(i)].size()) + ", expected " +
                           std::to_string(d));
    }
    for (int64_t j = 0; j < d; ++j) pts[size_t(i * d + j)] = double(features[size_t(i)][size_t(j)]);
  }

  Rng rng = Rng(opts.seed).stream("kmeans");
  std::vector<double> centroids = seed_centroids(pts, n, d, k, rng);
  std::vector<int> assign(size_t(n), -1);

  double prev_inertia = -1;
  int iters = 0;
  double inertia = 0;
  for (; iters < opts.max_iters; ++iters) {
    kernels::nearest_centroid(pts.data(), n, centroids.data(), k, d, assign.data());
    inertia = total_inertia(pts, n, d, centroids, assign);
    if (prev_inertia >= 0 && inertia > prev_inertia * (1.0 + 1e-9) + 1e-12) {
      throw NumericError("k-means inertia increased: " + std::to_string(prev_inertia) +
                         " -> " + std::to_string(inertia));
    }
    if (prev_inertia >= 0) {
      double improvement = (prev_inertia - inertia) / std::max(prev_inertia, 1e-300);
      if (improvement < opts.tol) {
        ++iters;
        break;
      }
    }
    prev_inertia = inertia;

    // means of assigned points, accumulated in ascending point order
    std::vector<double> sums(size_t(k * d), 0.0);
    std::vector<int64_t> counts(size_t(k), 0);
    for (int64_t i = 0; i < n; ++i) {
      int a = assign[size_t(i)];
      counts[size_t(a)] += 1;
      for (int64_t j = 0; j < d; ++j) sums[size_t(int64_t(a) * d + j)] += pts[size_t(i * d + j)];
    }
    for (int64_t c = 0; c < k; ++c) {
      if (counts[size_t(c)] > 0) {
        for (int64_t j = 0; j < d; ++j) {
          centroids[size_t(c * d + j)] = sums[size_t(c * d + j)] / double(counts[size_t(c)]);
        }
      }
    }
    // reseed empty clusters to the point farthest from its assigned centroid
    for (int64_t c = 0; c < k; ++c) {
      if (counts[size_t(c)] > 0) continue;
      int64_t far_idx = 0;
      double far_d = -1;
      for (int64_t i = 0; i < n; ++i) {
        double dd = kernels::squared_distance(
            pts.data() + i * d, centroids.data() + int64_t(assign[size_t(i)]) * d, d);
        if (dd > far_d) {
          far_d = dd;
          far_idx = i;
        }
      }
      std::copy_n(pts.data() + far_idx * d, d, centroids.data() + c * d);
      assign[size_t(far_idx)] = int(c);
    }
  }
  // final assignment reflects the last centroid update
  kernels::nearest_centroid(pts.data(), n, centroids.data(), k, d, assign.data());
  inertia = total_inertia(pts, n, d, centroids, assign);

  return Codebook(Tensor<double>({k, d}, std::move(centroids)), iters, inertia);
}

}  // namespace drsl
