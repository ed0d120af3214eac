#include <cmath>

#include "doctest.h"
#include "drsl/adam.hpp"
#include "drsl/errors.hpp"

using namespace drsl;

TEST_CASE("first step moves each weight by about lr times the gradient sign") {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.0;
  Adam<double> opt(cfg);

  Tensor<double> p = Tensor<double>::vec({1.0, -2.0, 0.5});
  Tensor<double> g = Tensor<double>::vec({0.3, -0.7, 4.0});
  Tensor<double> before = p;
  opt.step("w", p, g, true);

  for (size_t i = 0; i < 3; ++i) {
    double expect = before.data[i] -
                    cfg.lr * g.data[i] / (std::abs(g.data[i]) + cfg.eps);
    CHECK(p.data[i] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs((before.data[i] - p.data[i]) / cfg.lr -
                   (g.data[i] > 0 ? 1.0 : -1.0)) < 1e-6);
  }
}

TEST_CASE("zero gradient with decay shrinks weights by exactly lr*wd*theta") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  Adam<double> opt(cfg);

  Tensor<double> p = Tensor<double>::vec({2.0, -4.0});
  Tensor<double> g = Tensor<double>::zeros({2});
  opt.step("w", p, g, true);
  CHECK(p.data[0] == doctest::Approx(2.0 * (1.0 - cfg.lr * cfg.weight_decay)).epsilon(1e-15));
  CHECK(p.data[1] == doctest::Approx(-4.0 * (1.0 - cfg.lr * cfg.weight_decay)).epsilon(1e-15));
}

TEST_CASE("decay flag off leaves zero-gradient weights untouched") {
  AdamConfig cfg;
  cfg.weight_decay = 0.1;
  Adam<double> opt(cfg);
  Tensor<double> p = Tensor<double>::vec({2.0, -4.0});
  Tensor<double> g = Tensor<double>::zeros({2});
  opt.step("t", p, g, false);
  CHECK(p.data[0] == 2.0);
  CHECK(p.data[1] == -4.0);
}

TEST_CASE("two steps match the hand-evaluated recurrence") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  cfg.eps = 1e-8;
  cfg.weight_decay = 0.05;
  Adam<double> opt(cfg);

  double theta = 1.5;
  double g1 = 0.4, g2 = -0.2;

  Tensor<double> p = Tensor<double>::vec({theta});
  opt.step("w", p, Tensor<double>::vec({g1}), true);
  opt.step("w", p, Tensor<double>::vec({g2}), true);

  // reference: textbook update with decoupled decay
  double m = 0, v = 0, th = theta;
  int t = 0;
  for (double gi : {g1, g2}) {
    t += 1;
    m = cfg.beta1 * m + (1 - cfg.beta1) * gi;
    v = cfg.beta2 * v + (1 - cfg.beta2) * gi * gi;
    double mh = m / (1 - std::pow(cfg.beta1, t));
    double vh = v / (1 - std::pow(cfg.beta2, t));
    th -= cfg.lr * (mh / (std::sqrt(vh) + cfg.eps) + cfg.weight_decay * th);
  }
  CHECK(p.data[0] == doctest::Approx(th).epsilon(1e-15));
}

TEST_CASE("step counters are per parameter") {
  Adam<double> opt;
  Tensor<double> a = Tensor<double>::vec({1.0});
  Tensor<double> b = Tensor<double>::vec({1.0});
  Tensor<double> g = Tensor<double>::vec({0.5});
  opt.step("a", a, g, false);
  opt.step("a", a, g, false);
  opt.step("b", b, g, false);
  CHECK(opt.slots().at("a").t == 2);
  CHECK(opt.slots().at("b").t == 1);
}

TEST_CASE("moments survive restore_slot round trips") {
  Adam<double> opt;
  Tensor<double> p = Tensor<double>::vec({1.0, 2.0});
  Tensor<double> g = Tensor<double>::vec({0.1, -0.3});
  opt.step("w", p, g, true);

  auto saved = opt.slots().at("w");
  Adam<double> fresh;
  fresh.restore_slot("w", saved);
  Tensor<double> p2 = p;
  opt.step("w", p, g, true);
  fresh.step("w", p2, g, true);
  CHECK(bitwise_equal(p, p2));
}

TEST_CASE("shape changes on an existing slot are rejected") {
  Adam<double> opt;
  Tensor<double> p = Tensor<double>::vec({1.0, 2.0});
  Tensor<double> g = Tensor<double>::vec({0.1, -0.3});
  opt.step("w", p, g, true);
  Tensor<double> p3 = Tensor<double>::vec({1.0, 2.0, 3.0});
  Tensor<double> g3 = Tensor<double>::vec({0.1, -0.3, 0.2});
  CHECK_THROWS_AS(opt.step("w", p3, g3, true), DimensionError);
  Tensor<double> gbad = Tensor<double>::vec({0.1});
  CHECK_THROWS_AS(opt.step("w", p, gbad, true), DimensionError);
}
