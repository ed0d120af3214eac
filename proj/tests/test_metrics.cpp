#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "drsl/errors.hpp"
#include "drsl/metrics.hpp"
#include "drsl/rng.hpp"

using namespace drsl;

namespace {

// exhaustive Mann-Whitney pair counting
double pair_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      else if (s[i] == s[j]) wins += 0.5;
    }
  return wins / pairs;
}

// midrank formulation: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg)
double midrank_auc(const std::vector<double>& s, const std::vector<int>& y) {
  size_t n = s.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return s[a] < s[b]; });
  std::vector<double> rank(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && s[order[j + 1]] == s[order[i]]) ++j;
    double mid = (double(i) + double(j)) / 2.0 + 1.0;
    for (size_t q = i; q <= j; ++q) rank[order[q]] = mid;
    i = j + 1;
  }
  double r_pos = 0;
  double n_pos = 0, n_neg = 0;
  for (size_t q = 0; q < n; ++q) {
    if (y[q] == 1) {
      r_pos += rank[q];
      n_pos += 1;
    } else {
      n_neg += 1;
    }
  }
  return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

double direct_weighted_f1(const std::vector<int>& pred, const std::vector<int>& y,
                          int C) {
  double total = 0;
  for (int c = 0; c < C; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) support += 1;
      if (pred[i] == c && y[i] == c) tp += 1;
      if (pred[i] == c && y[i] != c) fp += 1;
      if (pred[i] != c && y[i] == c) fn += 1;
    }
    if (support == 0) continue;
    double denom = 2 * tp + fp + fn;
    double f1 = denom > 0 ? 2 * tp / denom : 0.0;
    total += f1 * support;
  }
  return total / double(y.size());
}

}  // namespace

TEST_CASE("roc_auc equals exhaustive pair counting on random instances") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 5 + rng.uniform_int(96);
    std::vector<double> s(n, 0.0);
    std::vector<int> y(n, 0);
    bool has0 = false, has1 = false;
    for (size_t i = 0; i < n; ++i) {
      // quantized scores force ties
      s[i] = std::floor(rng.uniform(0.0, 10.0)) / 10.0;
      y[i] = int(rng.uniform_int(2));
      has0 = has0 || y[i] == 0;
      has1 = has1 || y[i] == 1;
    }
    if (!has0) y[0] = 0;
    if (!has1) y[n - 1] = 1;

    double got = roc_auc(s, y);
    CHECK(got == pair_auc(s, y));  // exact, both count pairs in doubles
    CHECK(got == doctest::Approx(midrank_auc(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc on a known hand case") {
  // pos scores {0.9, 0.4}, neg {0.5, 0.1}: wins 3 of 4 pairs, one loss
  std::vector<double> s = {0.9, 0.4, 0.5, 0.1};
  std::vector<int> y = {1, 1, 0, 0};
  CHECK(roc_auc(s, y) == doctest::Approx(0.75));
}

TEST_CASE("perfect, inverted and constant scorers") {
  std::vector<double> s = {0.1, 0.2, 0.8, 0.9};
  std::vector<int> y = {0, 0, 1, 1};
  CHECK(roc_auc(s, y) == doctest::Approx(1.0));
  std::vector<int> flipped = {1, 1, 0, 0};
  CHECK(roc_auc(s, flipped) == doctest::Approx(0.0));
  std::vector<double> constant(4, 0.5);
  CHECK(roc_auc(constant, y) == doctest::Approx(0.5));
}

TEST_CASE("complementary labelings sum to one") {
  Rng rng(9);
  std::vector<double> s(30, 0.0);
  std::vector<int> y(30, 0), inv(30, 0);
  for (size_t i = 0; i < 30; ++i) {
    s[i] = rng.normal();
    y[i] = int(rng.uniform_int(2));
    inv[i] = 1 - y[i];
  }
  y[0] = 0;
  y[1] = 1;
  inv[0] = 1;
  inv[1] = 0;
  CHECK(roc_auc(s, y) + roc_auc(s, inv) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("monotone transforms leave the AUC unchanged") {
  Rng rng(11);
  std::vector<double> s(40, 0.0);
  std::vector<int> y(40, 0);
  for (size_t i = 0; i < 40; ++i) {
    s[i] = rng.uniform(-2.0, 2.0);
    y[i] = int(rng.uniform_int(2));
  }
  y[0] = 0;
  y[1] = 1;
  std::vector<double> warped(40, 0.0);
  for (size_t i = 0; i < 40; ++i) warped[i] = std::exp(3.0 * s[i]) + 7.0;
  CHECK(roc_auc(s, y) == roc_auc(warped, y));
}

TEST_CASE("roc_auc input validation") {
  std::vector<double> s = {0.1, 0.9};
  CHECK_THROWS_AS(roc_auc(s, {1, 1}), MetricError);
  CHECK_THROWS_AS(roc_auc(s, {0, 0}), MetricError);
  CHECK_THROWS_AS(roc_auc(s, {0, 2}), MetricError);
  CHECK_THROWS_AS(roc_auc({0.1}, {0, 1}), MetricError);
}

TEST_CASE("macro AUC averages one-vs-rest and skips absent classes") {
  std::vector<int> y = {0, 0, 1, 1, 2, 2};
  std::vector<std::vector<double>> scores = {
      {0.9, 0.8, 0.2, 0.1, 0.3, 0.2},  // separates class 0 perfectly
      {0.1, 0.2, 0.9, 0.8, 0.3, 0.1},  // separates class 1 perfectly
      {0.2, 0.1, 0.1, 0.3, 0.9, 0.8},  // separates class 2 perfectly
  };
  CHECK(macro_auc(scores, y, 3) == doctest::Approx(1.0));

  // one-vs-rest reduction must match binary roc_auc per class
  std::vector<int> rest0(6, 0);
  for (size_t i = 0; i < 6; ++i) rest0[i] = y[i] == 0 ? 1 : 0;
  double a0 = roc_auc(scores[0], rest0);
  CHECK(a0 == doctest::Approx(1.0));

  // class 3 absent: average over the present three only
  std::vector<std::vector<double>> wide = scores;
  wide.push_back({0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  CHECK(macro_auc(wide, y, 4) == doctest::Approx(1.0));

  std::vector<int> single(6, 0);
  CHECK_THROWS_AS(macro_auc(scores, single, 3), MetricError);
}

TEST_CASE("weighted F1 equals the direct formula on random instances") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    int C = 2 + int(rng.uniform_int(4));
    size_t n = 10 + rng.uniform_int(60);
    std::vector<int> y(n, 0), pred(n, 0);
    for (size_t i = 0; i < n; ++i) {
      y[i] = int(rng.uniform_int(uint64_t(C)));
      pred[i] = int(rng.uniform_int(uint64_t(C)));
    }
    CHECK(weighted_f1(pred, y, C) ==
          doctest::Approx(direct_weighted_f1(pred, y, C)).epsilon(1e-12));
  }
}

TEST_CASE("weighted F1 hand cases") {
  // all predicted class 0, labels balanced over 3 classes:
  // class 0: P=1/3, R=1 -> F1=1/2 weighted by support 1/3; others 0
  std::vector<int> y = {0, 1, 2};
  std::vector<int> pred = {0, 0, 0};
  CHECK(weighted_f1(pred, y, 3) == doctest::Approx(1.0 / 6).epsilon(1e-12));

  std::vector<int> perfect = {0, 1, 2};
  CHECK(weighted_f1(perfect, y, 3) == doctest::Approx(1.0));

  CHECK_THROWS_AS(weighted_f1({0, 3}, {0, 1}, 3), MetricError);
  CHECK_THROWS_AS(weighted_f1({0}, {0, 1}, 2), MetricError);
}
