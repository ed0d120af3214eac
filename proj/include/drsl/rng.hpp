#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drsl/errors.hpp"

namespace drsl {

// Seeded RNG with hand-rolled distributions so that every draw is a fixed
// function of the generator stream. std::normal_distribution and friends are
// implementation-defined and keep hidden state, which breaks checkpoint
// round trips; these do not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  // Derives an independent stream, e.g. Rng(seed).stream("init").
  Rng stream(const std::string& name) const {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return Rng(seed_ ^ h);
  }

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1) with 53 random bits
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; consumes exactly two uniforms per call
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // uniform integer in [0, n), rejection sampled to avoid modulo bias
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw InputError("uniform_int: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // first `r` of a shuffled 0..n-1, returned ascending; all of them when r >= n
  std::vector<int> sample_without_replacement(int n, int r) {
    std::vector<int> idx(static_cast<size_t>(n), 0);
    std::iota(idx.begin(), idx.end(), 0);
    int take = std::min(n, r);
    for (int i = 0; i < take; ++i) {
      int j = i + int(uniform_int(uint64_t(n - i)));
      std::swap(idx[size_t(i)], idx[size_t(j)]);
    }
    idx.resize(size_t(take));
    std::sort(idx.begin(), idx.end());
    return idx;
  }

  std::string save_state() const {
    std::ostringstream os;
    os << seed_ << ' ' << gen_;
    return os.str();
  }

  void restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> seed_ >> gen_;
    if (!is) throw FormatError("bad RNG state string", 0);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace drsl
