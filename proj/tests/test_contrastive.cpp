#include <cmath>
#include <vector>

#include "doctest.h"
#include "drsl/binding.hpp"
#include "drsl/contrastive.hpp"
#include "drsl/grad_check.hpp"
#include "drsl/rng.hpp"

using namespace drsl;

namespace {

// independent oracle working on plain matrices
double oracle_ce_rows(const std::vector<std::vector<double>>& logits,
                      const std::vector<int>& targets) {
  double total = 0;
  for (size_t r = 0; r < logits.size(); ++r) {
    double mx = -HUGE_VAL;
    for (double v : logits[r]) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits[r]) z += std::exp(v - mx);
    total += -(logits[r][size_t(targets[r])] - mx - std::log(z));
  }
  return total / double(logits.size());
}

double oracle_loss(const std::vector<std::vector<double>>& v,
                   const std::vector<std::vector<double>>& t, double sigma1,
                   double sigma2, const std::vector<bool>& mask, bool keep_negatives) {
  size_t n = v.size();
  std::vector<int> present;
  for (size_t i = 0; i < n; ++i)
    if (mask[i]) present.push_back(int(i));
  if (present.empty()) return 0.0;

  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
  };

  // slide -> report: anchors and candidates both restricted to present rows
  std::vector<std::vector<double>> s_str;
  std::vector<int> targets_str;
  for (size_t a = 0; a < present.size(); ++a) {
    std::vector<double> row;
    for (size_t c = 0; c < present.size(); ++c)
      row.push_back(sigma1 * dot(v[size_t(present[a])], t[size_t(present[c])]));
    s_str.push_back(row);
    targets_str.push_back(int(a));
  }
  double l_str = oracle_ce_rows(s_str, targets_str);

  // report -> slide: anchors restricted; candidate slides depend on the flag
  std::vector<std::vector<double>> s_rts;
  std::vector<int> targets_rts;
  for (size_t a = 0; a < present.size(); ++a) {
    std::vector<double> row;
    if (keep_negatives) {
      for (size_t c = 0; c < n; ++c)
        row.push_back(sigma2 * dot(t[size_t(present[a])], v[c]));
      targets_rts.push_back(present[a]);
    } else {
      for (size_t c = 0; c < present.size(); ++c)
        row.push_back(sigma2 * dot(t[size_t(present[a])], v[size_t(present[c])]));
      targets_rts.push_back(int(a));
    }
    s_rts.push_back(row);
  }
  double l_rts = oracle_ce_rows(s_rts, targets_rts);
  return 0.5 * (l_str + l_rts);
}

struct Instance {
  std::vector<std::vector<double>> v, t;
  Tensor<double> vm, tm;
};

Instance random_instance(Rng& rng, size_t n, size_t dim) {
  Instance in;
  in.vm = Tensor<double>::zeros({int64_t(n), int64_t(dim)});
  in.tm = Tensor<double>::zeros({int64_t(n), int64_t(dim)});
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> vi(dim), ti(dim);
    double nv = 0, nt = 0;
    for (size_t j = 0; j < dim; ++j) {
      vi[j] = rng.normal();
      ti[j] = rng.normal();
      nv += vi[j] * vi[j];
      nt += ti[j] * ti[j];
    }
    for (size_t j = 0; j < dim; ++j) {
      vi[j] /= std::sqrt(nv);
      ti[j] /= std::sqrt(nt);
      in.vm.data[i * dim + j] = vi[j];
      in.tm.data[i * dim + j] = ti[j];
    }
    in.v.push_back(vi);
    in.t.push_back(ti);
  }
  return in;
}

double graph_loss(const Instance& in, const TemperaturePair<double>& temps,
                  const std::vector<bool>& mask, bool keep_negatives) {
  GraphD g;
  auto tp = const_cast<TemperaturePair<double>&>(temps);
  TempVars<double> tv = bind_temperatures<double>(g, tp, nullptr);
  SimilarityPair sims =
      similarity_matrices(g, g.constant(in.vm), g.constant(in.tm), tv);
  Var loss = contrastive_loss(g, sims, mask, keep_negatives);
  return g.value(loss).data[0];
}

}  // namespace

TEST_CASE("temperatures initialize to 1/0.07 in both directions") {
  auto temps = init_temperatures<double>();
  CHECK(std::exp(temps.log_sigma1.data[0]) == doctest::Approx(1.0 / 0.07).epsilon(1e-12));
  CHECK(std::exp(temps.log_sigma2.data[0]) == doctest::Approx(1.0 / 0.07).epsilon(1e-12));
  CHECK(temps.log_sigma1.requires_grad);
  CHECK(temps.log_sigma2.requires_grad);
}

TEST_CASE("orthonormal matching embeddings at unit temperature give identity similarities") {
  Instance in;
  in.vm = Tensor<double>::mat(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  in.tm = in.vm;
  TemperaturePair<double> temps = init_temperatures<double>();
  temps.log_sigma1.data[0] = 0.0;
  temps.log_sigma2.data[0] = 0.0;

  GraphD g;
  TempVars<double> tv = bind_temperatures<double>(g, temps, nullptr);
  SimilarityPair sims = similarity_matrices(g, g.constant(in.vm), g.constant(in.tm), tv);
  const auto& s = g.value(sims.s_str);
  for (int64_t i = 0; i < 3; ++i)
    for (int64_t j = 0; j < 3; ++j)
      CHECK(s.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
  // equal temperatures make the two directions exact transposes
  const auto& sr = g.value(sims.s_rts);
  for (int64_t i = 0; i < 3; ++i)
    for (int64_t j = 0; j < 3; ++j) CHECK(sr.at(i, j) == s.at(j, i));
}

TEST_CASE("loss equals the loop oracle on random instances") {
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    size_t n = 2 + rng.uniform_int(5);
    Instance in = random_instance(rng, n, 4);
    TemperaturePair<double> temps = init_temperatures<double>();
    temps.log_sigma1.data[0] = rng.uniform(-1.0, 3.0);
    temps.log_sigma2.data[0] = rng.uniform(-1.0, 3.0);

    std::vector<bool> mask(n, false);
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
      mask[i] = rng.uniform(0.0, 1.0) < 0.7;
      any = any || mask[i];
    }
    bool keep = trial % 2 == 0;
    double got = graph_loss(in, temps, mask, keep);
    double want = oracle_loss(in.v, in.t, std::exp(temps.log_sigma1.data[0]),
                              std::exp(temps.log_sigma2.data[0]), mask, keep);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    (void)any;
  }
}

TEST_CASE("closed forms: single pair gives zero, identical embeddings give ln N") {
  TemperaturePair<double> temps = init_temperatures<double>();

  Rng rng(5);
  Instance one = random_instance(rng, 1, 4);
  CHECK(std::abs(graph_loss(one, temps, {true}, false)) < 1e-9);

  // four identical rows: every softmax row is uniform in both directions
  Instance same;
  same.vm = Tensor<double>::zeros({4, 3});
  same.tm = Tensor<double>::zeros({4, 3});
  for (int i = 0; i < 4; ++i) {
    same.vm.data[size_t(i * 3)] = 1.0;
    same.tm.data[size_t(i * 3)] = 1.0;
  }
  std::vector<bool> all(4, true);
  CHECK(graph_loss(same, temps, all, false) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(graph_loss(same, temps, all, true) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("no reports at all reduces the loss to a constant zero") {
  Rng rng(7);
  Instance in = random_instance(rng, 3, 4);
  TemperaturePair<double> temps = init_temperatures<double>();
  std::vector<bool> none(3, false);
  CHECK(graph_loss(in, temps, none, false) == 0.0);
  CHECK(graph_loss(in, temps, none, true) == 0.0);
}

TEST_CASE("fully masked slides cannot influence the default loss") {
  Rng rng(11);
  Instance in = random_instance(rng, 4, 4);
  TemperaturePair<double> temps = init_temperatures<double>();
  std::vector<bool> mask = {true, false, true, true};

  double base = graph_loss(in, temps, mask, false);
  Instance tweaked = in;
  for (size_t j = 0; j < 4; ++j) {
    tweaked.vm.data[1 * 4 + j] = rng.normal();
    tweaked.tm.data[1 * 4 + j] = rng.normal();
  }
  CHECK(graph_loss(tweaked, temps, mask, false) == base);

  // with keep_negatives the masked slide stays a candidate: changing its
  // embedding must move the report->slide direction
  double keep_base = graph_loss(in, temps, mask, true);
  double keep_tweak = graph_loss(tweaked, temps, mask, true);
  CHECK(keep_base != keep_tweak);
}

TEST_CASE("consistent permutation of slides leaves the loss unchanged") {
  Rng rng(13);
  Instance in = random_instance(rng, 5, 3);
  TemperaturePair<double> temps = init_temperatures<double>();
  std::vector<bool> mask = {true, true, false, true, true};
  double base = graph_loss(in, temps, mask, true);

  std::vector<int> perm = {3, 0, 4, 2, 1};
  Instance moved;
  moved.vm = Tensor<double>::zeros({5, 3});
  moved.tm = Tensor<double>::zeros({5, 3});
  std::vector<bool> moved_mask(5, false);
  for (size_t i = 0; i < 5; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      moved.vm.data[i * 3 + j] = in.vm.data[size_t(perm[i]) * 3 + j];
      moved.tm.data[i * 3 + j] = in.tm.data[size_t(perm[i]) * 3 + j];
    }
    moved_mask[i] = mask[size_t(perm[i])];
  }
  CHECK(graph_loss(moved, temps, moved_mask, true) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("temperature gradients match finite differences") {
  Rng rng(17);
  Instance in = random_instance(rng, 4, 3);
  std::vector<bool> mask = {true, true, true, false};

  for (bool keep : {false, true}) {
    auto temps = init_temperatures<double>();
    std::vector<Tensor<double>> params = {temps.log_sigma1, temps.log_sigma2};
    auto build = [&](GraphD& g, const std::vector<Var>& vs) {
      TempVars<double> tv{vs[0], vs[1]};
      SimilarityPair sims =
          similarity_matrices(g, g.constant(in.vm), g.constant(in.tm), tv);
      return contrastive_loss(g, sims, mask, keep);
    };
    auto report = grad_check<double>(build, params, 1e-7);
    CHECK_MESSAGE(report.pass, report.message);
  }
}

TEST_CASE("embedding gradients match finite differences through the loss") {
  Rng rng(19);
  Instance in = random_instance(rng, 3, 3);
  std::vector<bool> mask = {true, false, true};
  auto temps = init_temperatures<double>();

  Tensor<double> vm = in.vm;
  vm.requires_grad = true;
  std::vector<Tensor<double>> params = {vm};
  auto build = [&](GraphD& g, const std::vector<Var>& vs) {
    TempVars<double> tv;
    tv.log_sigma1 = g.constant(temps.log_sigma1);
    tv.log_sigma2 = g.constant(temps.log_sigma2);
    SimilarityPair sims = similarity_matrices(g, vs[0], g.constant(in.tm), tv);
    return contrastive_loss(g, sims, mask, true);
  };
  auto report = grad_check<double>(build, params, 1e-7);
  CHECK_MESSAGE(report.pass, report.message);
}

TEST_CASE("mask length must match the similarity size") {
  Rng rng(23);
  Instance in = random_instance(rng, 3, 3);
  auto temps = init_temperatures<double>();
  GraphD g;
  TempVars<double> tv = bind_temperatures<double>(g, temps, nullptr);
  SimilarityPair sims = similarity_matrices(g, g.constant(in.vm), g.constant(in.tm), tv);
  std::vector<bool> short_mask(2, true);
  CHECK_THROWS_AS(contrastive_loss(g, sims, short_mask, false), DimensionError);
}

TEST_CASE("similarity matrices require equal embedding shapes") {
  auto temps = init_temperatures<double>();
  GraphD g;
  TempVars<double> tv = bind_temperatures<double>(g, temps, nullptr);
  Var v = g.constant(Tensor<double>::zeros({3, 4}));
  Var t = g.constant(Tensor<double>::zeros({3, 5}));
  CHECK_THROWS_AS(similarity_matrices(g, v, t, tv), DimensionError);
}
