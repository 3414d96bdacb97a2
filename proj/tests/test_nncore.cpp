#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "tubekit/nncore.hpp"

using namespace tubekit;

namespace {

std::vector<Tensor*> collect(DenseLayer& layer) { return {&layer.W, &layer.b}; }

std::vector<Tensor*> collect(LstmCell& cell) { return {&cell.Wx, &cell.Wh, &cell.b}; }

}  // namespace

TEST_SUITE("nncore") {
  TEST_CASE("dense forward matches hand computation") {
    DenseLayer layer(2, 2, "d");
    // W rows are per-input: y_j = sum_i x_i W[i][j] + b_j.
    layer.W.value = {1.0, 2.0, 3.0, 4.0};
    layer.b.value = {0.5, -0.5};
    const Vec y = layer.forward(std::vector<double>{1.0, -1.0});
    CHECK(y[0] == doctest::Approx(1.0 * 1.0 - 1.0 * 3.0 + 0.5));
    CHECK(y[1] == doctest::Approx(1.0 * 2.0 - 1.0 * 4.0 - 0.5));
  }

  TEST_CASE("dense backward gradient matches central differences") {
    std::mt19937_64 rng(11);
    DenseLayer layer(3, 2, "d");
    layer.init_gaussian(0.5, rng);
    const Vec x = {0.3, -1.2, 0.7};
    const Vec target = {0.25, -0.75};
    auto params = collect(layer);

    auto loss_fn = [&]() { return smoothed_l1_loss(layer.forward(x), target); };
    layer.W.zero_grad();
    layer.b.zero_grad();
    const Vec y = layer.forward(x);
    const Vec dx = layer.backward(x, smoothed_l1_loss_grad(y, target));
    CHECK(dx.size() == 3);
    const GradCheckReport report = grad_check(loss_fn, params, 1e-4);
    CHECK(report.max_rel_error < 1e-6);
  }

  TEST_CASE("lstm step matches the scalar reference implementation") {
    std::mt19937_64 rng(17);
    LstmCell cell(3, 4, "lstm");
    cell.init_gaussian(0.2, rng);
    LstmState state = cell.initial_state();
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int t = 0; t < 5; ++t) {
      Vec x(3);
      for (double& v : x) v = dist(rng);
      const LstmState next = cell.step(state, x);
      const LstmState ref = oracles::reference_lstm_step(cell.Wx, cell.Wh, cell.b, state, x);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(next.c[j] == doctest::Approx(ref.c[j]).epsilon(1e-12));
        CHECK(next.h[j] == doctest::Approx(ref.h[j]).epsilon(1e-12));
      }
      state = next;
    }
  }

  TEST_CASE("lstm init opens the forget gate") {
    std::mt19937_64 rng(3);
    LstmCell cell(2, 3, "lstm");
    cell.init_gaussian(0.01, rng);
    // Bias layout [i | f | o | g]; only the forget block is nonzero at init.
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(cell.b.value[j] == 0.0);
      CHECK(cell.b.value[3 + j] == 1.0);
      CHECK(cell.b.value[6 + j] == 0.0);
      CHECK(cell.b.value[9 + j] == 0.0);
    }
  }

  TEST_CASE("unrolled lstm gradient matches central differences") {
    std::mt19937_64 rng(29);
    LstmCell cell(2, 3, "lstm");
    cell.init_gaussian(0.3, rng);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const int steps = 6;
    std::vector<Vec> inputs(steps, Vec(2));
    for (Vec& x : inputs)
      for (double& v : x) v = dist(rng);

    // Loss: smoothed L1 of the final hidden state against a fixed target.
    const Vec target = {0.4, -0.2, 0.1};
    auto loss_fn = [&]() {
      LstmState s = cell.initial_state();
      for (const Vec& x : inputs) s = cell.step(s, x);
      return smoothed_l1_loss(s.h, target);
    };

    auto params = collect(cell);
    for (Tensor* t : params) t->zero_grad();
    std::vector<LstmStepCache> caches(steps);
    LstmState s = cell.initial_state();
    for (int t = 0; t < steps; ++t) s = cell.step(s, inputs[t], &caches[t]);
    Vec dh = smoothed_l1_loss_grad(s.h, target);
    Vec dc(3, 0.0);
    for (int t = steps - 1; t >= 0; --t) {
      Vec dx, dh_prev, dc_prev;
      cell.backward(caches[t], dh, dc, dx, dh_prev, dc_prev);
      dh = dh_prev;
      dc = dc_prev;
    }
    const GradCheckReport report = grad_check(loss_fn, params, 1e-4);
    CHECK(report.max_rel_error < 1e-4);
  }

  TEST_CASE("softmax is shift invariant and normalized") {
    const Vec p = softmax(std::vector<double>{1.0, 2.0, 3.0});
    const Vec q = softmax(std::vector<double>{1001.0, 1002.0, 1003.0});
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
      sum += p[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[2] > p[1]);
    CHECK(p[1] > p[0]);
    // Hand value: exp(k)/sum for k=1..3.
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(p[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  }

  TEST_CASE("cross entropy matches -log softmax and its gradient sums to zero") {
    const Vec logits = {0.2, -1.3, 0.9, 0.0};
    Vec probs;
    const double loss = cross_entropy_loss(logits, 2, &probs);
    CHECK(loss == doctest::Approx(-std::log(probs[2])).epsilon(1e-12));
    const Vec grad = cross_entropy_grad(probs, 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      sum += grad[i];
      const double expect = probs[i] - (i == 2 ? 1.0 : 0.0);
      CHECK(grad[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(cross_entropy_loss(logits, 4), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy_loss(logits, -1), std::invalid_argument);
  }

  TEST_CASE("smoothed l1 loss gradient matches central differences") {
    const Vec pred = {0.3, -2.0, 0.999, 1.001};
    const Vec target = {0.0, 0.0, 0.0, 0.0};
    const Vec grad = smoothed_l1_loss_grad(pred, target);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      Vec lo = pred, hi = pred;
      lo[i] -= 1e-6;
      hi[i] += 1e-6;
      const double numeric =
          (smoothed_l1_loss(hi, target) - smoothed_l1_loss(lo, target)) / 2e-6;
      CHECK(grad[i] == doctest::Approx(numeric).epsilon(1e-5));
    }
    // Sum of per-component penalties: 0.5*0.3^2 + (2-0.5) + ~0.5 + ~0.5.
    const double expect = 0.5 * 0.09 + 1.5 + 0.5 * 0.999 * 0.999 + (1.001 - 0.5);
    CHECK(smoothed_l1_loss(pred, target) == doctest::Approx(expect).epsilon(1e-6));
  }

  TEST_CASE("sgd momentum displacement over two constant-gradient steps") {
    Tensor t("p", {2});
    t.value = {1.0, -1.0};
    t.grad = {0.5, -0.25};
    SgdMomentum opt(0.1, 0.9);
    std::vector<Tensor*> params = {&t};
    opt.step(params);
    // v1 = -lr*g, p1 = p0 + v1.
    CHECK(t.value[0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-12));
    t.grad = {0.5, -0.25};
    opt.step(params);
    // v2 = 0.9*v1 - lr*g => total displacement -lr*g*(1 + 1.9) = -lr*g*2.9.
    CHECK(t.value[0] == doctest::Approx(1.0 - 0.1 * 0.5 * 2.9).epsilon(1e-12));
    CHECK(t.value[1] == doctest::Approx(-1.0 + 0.1 * 0.25 * 2.9).epsilon(1e-12));
  }

  TEST_CASE("sgd momentum rejects bad hyperparameters and non-finite gradients") {
    CHECK_THROWS_AS(SgdMomentum(0.0, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(SgdMomentum(0.1, 1.0), std::invalid_argument);
    Tensor t("p", {1});
    t.value = {1.0};
    t.grad = {std::numeric_limits<double>::quiet_NaN()};
    SgdMomentum opt(0.1, 0.0);
    std::vector<Tensor*> params = {&t};
    CHECK_THROWS_AS(opt.step(params), std::runtime_error);
    CHECK(t.value[0] == 1.0);  // aborted step leaves the parameter untouched
  }

  TEST_CASE("global-norm clipping bounds the applied gradient") {
    Tensor t("p", {2});
    t.value = {0.0, 0.0};
    t.grad = {3.0, 4.0};  // norm 5
    SgdMomentum opt(1.0, 0.0);
    opt.set_grad_clip(1.0);
    std::vector<Tensor*> params = {&t};
    opt.step(params);
    // Gradient is scaled to unit norm, so the step moves by lr * g/5.
    CHECK(t.value[0] == doctest::Approx(-3.0 / 5.0).epsilon(1e-12));
    CHECK(t.value[1] == doctest::Approx(-4.0 / 5.0).epsilon(1e-12));
  }

  TEST_CASE("grad_check validates epsilon range") {
    Tensor t("p", {1});
    t.value = {1.0};
    t.grad = {2.0};
    std::vector<Tensor*> params = {&t};
    auto loss_fn = [&]() { return t.value[0] * t.value[0]; };
    CHECK_THROWS_AS(grad_check(loss_fn, params, 1e-7), std::invalid_argument);
    CHECK_THROWS_AS(grad_check(loss_fn, params, 1e-2), std::invalid_argument);
    const GradCheckReport report = grad_check(loss_fn, params, 1e-4);
    CHECK(report.max_rel_error < 1e-8);  // d/dp p^2 = 2p = 2
  }

  TEST_CASE("gaussian init is seed deterministic") {
    std::mt19937_64 a(123), b(123), c(124);
    Tensor ta("t", {64}), tb("t", {64}), tc("t", {64});
    ta.init_gaussian(0.5, a);
    tb.init_gaussian(0.5, b);
    tc.init_gaussian(0.5, c);
    CHECK(ta.value == tb.value);
    CHECK(ta.value != tc.value);
  }
}
