#include <doctest.h>

#include <cmath>
#include <vector>

#include "nfad/finite_diff.hpp"
#include "nfad/losses.hpp"
#include "nfad/net.hpp"
#include "nfad/optim.hpp"
#include "nfad/rng.hpp"
#include "oracles.hpp"

using namespace nfad;

TEST_SUITE_BEGIN("gradnet");

TEST_CASE("forward matches a hand computation") {
  DiffNet net({2, 2, 1}, Activation::relu);
  net.layers[0].W << 1.0, -1.0, 0.5, 2.0;
  net.layers[0].b << 0.1, -0.2;
  net.layers[1].W << 2.0, -3.0;
  net.layers[1].b << 0.25;
  Mat X(1, 2);
  X << 1.0, 2.0;
  // pre = (-0.9, 4.3), relu = (0, 4.3), out = -3 * 4.3 + 0.25
  Mat Y = net.forward(X);
  CHECK(Y(0, 0) == doctest::Approx(-12.65).epsilon(1e-14));
  CHECK(net.infer(X)(0, 0) == Y(0, 0));
}

TEST_CASE("infer equals forward on a random net") {
  Rng rng(2);
  DiffNet net({3, 5, 4, 2}, Activation::tanh);
  net.glorot_init(rng);
  Mat X = sample_std_normal(6, 3, rng);
  CHECK((net.forward(X) - net.infer(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("glorot init bounds and zero biases") {
  Rng rng(4);
  DiffNet net({10, 7, 3}, Activation::relu);
  net.glorot_init(rng);
  double a0 = std::sqrt(6.0 / (10 + 7)), a1 = std::sqrt(6.0 / (7 + 3));
  CHECK(net.layers[0].W.cwiseAbs().maxCoeff() <= a0);
  CHECK(net.layers[1].W.cwiseAbs().maxCoeff() <= a1);
  CHECK(net.layers[0].b.cwiseAbs().maxCoeff() == 0.0);
  CHECK(net.layers[1].b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero_last_layer silences the output") {
  Rng rng(5);
  DiffNet net({2, 6, 3}, Activation::relu);
  net.glorot_init(rng);
  net.zero_last_layer();
  Mat X = sample_std_normal(5, 2, rng);
  CHECK(net.infer(X).cwiseAbs().maxCoeff() == 0.0);
}

static void check_param_grads(Activation act) {
  Rng rng(7);
  DiffNet net({3, 8, 5, 2}, act);
  net.glorot_init(rng);
  Mat X = sample_std_normal(4, 3, rng);
  auto eval = [&]() { return 0.5 * net.infer(X).squaredNorm(); };

  Mat Y = net.forward(X);
  net.zero_grad();
  Mat dX = net.backward(Y);

  for (ParamRef p : net.params()) {
    for (long i = 0; i < p.size; ++i) {
      double fd = finite_diff_at(eval, p.value + i, 1e-6);
      CHECK(oracle::rel_err(p.grad[i], fd) < 1e-4);
    }
  }
  // input gradient from the same backward call
  for (long r = 0; r < X.rows(); ++r)
    for (long c = 0; c < X.cols(); ++c) {
      double fd = finite_diff_at(eval, &X(r, c), 1e-6);
      CHECK(oracle::rel_err(dX(r, c), fd) < 1e-4);
    }
}

TEST_CASE("backward matches finite differences (relu)") {
  check_param_grads(Activation::relu);
}
TEST_CASE("backward matches finite differences (tanh)") {
  check_param_grads(Activation::tanh);
}
TEST_CASE("backward matches finite differences (softplus)") {
  check_param_grads(Activation::softplus);
}

TEST_CASE("gradients accumulate until zero_grad") {
  Rng rng(8);
  DiffNet net({2, 4, 1}, Activation::relu);
  net.glorot_init(rng);
  Mat X = sample_std_normal(3, 2, rng);
  net.forward(X);
  net.zero_grad();
  net.backward(Mat::Ones(3, 1));
  double g1 = net.layers[0].gW.cwiseAbs().sum();
  net.forward(X);
  net.backward(Mat::Ones(3, 1));
  CHECK(net.layers[0].gW.cwiseAbs().sum() ==
        doctest::Approx(2.0 * g1).epsilon(1e-12));
  net.zero_grad();
  CHECK(net.layers[0].gW.cwiseAbs().sum() == 0.0);
}

TEST_CASE("stable sigmoid and softplus extremes") {
  CHECK(stable_sigmoid(0.0) == 0.5);
  CHECK(stable_sigmoid(800.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(stable_sigmoid(-800.0) >= 0.0);
  CHECK(stable_sigmoid(-800.0) < 1e-300);
  CHECK(std::isfinite(stable_softplus(800.0)));
  CHECK(stable_softplus(800.0) == doctest::Approx(800.0).epsilon(1e-15));
  CHECK(stable_softplus(-800.0) >= 0.0);
  CHECK(stable_softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("bce values: hand cases and extreme logits") {
  Mat l1(1, 1);
  Vec t1(1);
  l1 << 0.0;
  t1 << 1.0;
  CHECK(bce_with_logits(l1, t1, nullptr) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  l1 << 1.5;
  CHECK(bce_with_logits(l1, t1, nullptr) ==
        doctest::Approx(std::log1p(std::exp(-1.5))).epsilon(1e-13));
  t1 << 0.0;
  CHECK(bce_with_logits(l1, t1, nullptr) ==
        doctest::Approx(1.5 + std::log1p(std::exp(-1.5))).epsilon(1e-13));

  Mat lx(4, 1);
  Vec tx(4);
  lx << 500.0, -500.0, 500.0, -500.0;
  tx << 1.0, 0.0, 0.0, 1.0;
  double loss = bce_with_logits(lx, tx, nullptr);
  CHECK(std::isfinite(loss));
  // two perfect rows contribute ~0, two wrong rows ~500 each
  CHECK(loss == doctest::Approx(250.0).epsilon(1e-12));
}

TEST_CASE("bce gradient is (sigmoid - target) / n") {
  Rng rng(9);
  Mat logits = sample_std_normal(6, 1, rng);
  Vec targets(6);
  targets << 1, 0, 1, 1, 0, 0;
  Mat grad;
  bce_with_logits(logits, targets, &grad);
  for (long i = 0; i < 6; ++i) {
    double want = (stable_sigmoid(logits(i, 0)) - targets[i]) / 6.0;
    CHECK(grad(i, 0) == doctest::Approx(want).epsilon(1e-13));
    auto eval = [&]() { return bce_with_logits(logits, targets, nullptr); };
    double fd = finite_diff_at(eval, &logits(i, 0), 1e-6);
    CHECK(oracle::rel_err(grad(i, 0), fd) < 1e-4);
  }
}

TEST_CASE("adamw first step closed form") {
  DiffNet net({1, 1}, Activation::identity);
  net.layers[0].W << 1.0;
  net.layers[0].b << 0.0;
  net.zero_grad();
  net.layers[0].gW << 0.5;
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  AdamW opt(net.params(), cfg);
  opt.step();
  // bias-corrected m = g, v = g^2: update is lr * g / (|g| + eps)
  double want = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8));
  CHECK(net.layers[0].W(0, 0) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("decoupled decay acts alone when gradients vanish") {
  DiffNet net({1, 1}, Activation::identity);
  net.layers[0].W << 2.0;
  net.layers[0].b << 0.0;
  net.zero_grad();
  AdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.01;
  AdamW opt(net.params(), cfg);
  opt.step();
  CHECK(net.layers[0].W(0, 0) ==
        doctest::Approx(2.0 * (1.0 - 1e-5)).epsilon(1e-15));
}

TEST_CASE("optimizer rejects non-finite gradients") {
  DiffNet net({1, 1}, Activation::identity);
  net.zero_grad();
  net.layers[0].gW << std::numeric_limits<double>::quiet_NaN();
  AdamW opt(net.params(), AdamConfig{});
  CHECK_THROWS(opt.step());
}

TEST_CASE("adam config validation") {
  AdamConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS(bad.validate());
  bad = AdamConfig{};
  bad.beta1 = 1.0;
  CHECK_THROWS(bad.validate());
  bad = AdamConfig{};
  bad.weight_decay = -0.1;
  CHECK_THROWS(bad.validate());
  AdamConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("identical runs produce identical trajectories") {
  auto run = [](std::vector<double>& out) {
    Rng rng(13);
    DiffNet net({2, 6, 1}, Activation::relu);
    net.glorot_init(rng);
    AdamConfig cfg;
    cfg.weight_decay = 0.01;
    AdamW opt(net.params(), cfg);
    Mat X = sample_std_normal(8, 2, rng);
    Vec t(8);
    for (int i = 0; i < 8; ++i) t[i] = i % 2;
    for (int s = 0; s < 10; ++s) {
      Mat logits = net.forward(X);
      Mat dl;
      bce_with_logits(logits, t, &dl);
      net.zero_grad();
      net.backward(dl);
      opt.step();
    }
    for (ParamRef p : net.params())
      for (long i = 0; i < p.size; ++i) out.push_back(p.value[i]);
  };
  std::vector<double> a, b;
  run(a);
  run(b);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_SUITE_END();
