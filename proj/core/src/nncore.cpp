#include "tubekit/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tubekit/geometry.hpp"

namespace tubekit {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor::Tensor(std::string name_, std::vector<std::size_t> shape_)
    : name(std::move(name_)), shape(std::move(shape_)) {
  value.assign(shape_size(shape), 0.0);
  grad.assign(value.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Tensor::init_gaussian(double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : value) v = dist(rng);
}

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, std::string name)
    : W(name + ".W", {in_dim, out_dim}), b(name + ".b", {out_dim}), in_dim_(in_dim),
      out_dim_(out_dim) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("DenseLayer: zero dimension");
}

void DenseLayer::init_gaussian(double stddev, std::mt19937_64& rng) {
  W.init_gaussian(stddev, rng);
  std::fill(b.value.begin(), b.value.end(), 0.0);
}

Vec DenseLayer::forward(std::span<const double> x) const {
  if (x.size() != in_dim_) throw std::invalid_argument("DenseLayer::forward: input size mismatch");
  Vec y = b.value;
  const double* w = W.value.data();
  for (std::size_t i = 0; i < in_dim_; ++i) {
    const double xi = x[i];
    const double* row = w + i * out_dim_;
    for (std::size_t j = 0; j < out_dim_; ++j) y[j] += row[j] * xi;
  }
  return y;
}

Vec DenseLayer::backward(std::span<const double> x, std::span<const double> dy) {
  if (x.size() != in_dim_ || dy.size() != out_dim_) {
    throw std::invalid_argument("DenseLayer::backward: size mismatch");
  }
  Vec dx(in_dim_, 0.0);
  const double* w = W.value.data();
  double* dw = W.grad.data();
  for (std::size_t i = 0; i < in_dim_; ++i) {
    const double xi = x[i];
    const double* wrow = w + i * out_dim_;
    double* dwrow = dw + i * out_dim_;
    double acc = 0.0;
    for (std::size_t j = 0; j < out_dim_; ++j) {
      dwrow[j] += xi * dy[j];
      acc += wrow[j] * dy[j];
    }
    dx[i] = acc;
  }
  for (std::size_t j = 0; j < out_dim_; ++j) b.grad[j] += dy[j];
  return dx;
}

LstmCell::LstmCell(std::size_t input_dim, std::size_t hidden_dim, std::string name_prefix)
    : Wx(name_prefix + ".Wx", {input_dim, 4 * hidden_dim}),
      Wh(name_prefix + ".Wh", {hidden_dim, 4 * hidden_dim}), b(name_prefix + ".b", {4 * hidden_dim}),
      input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (input_dim == 0 || hidden_dim == 0) throw std::invalid_argument("LstmCell: zero dimension");
}

void LstmCell::init_gaussian(double stddev, std::mt19937_64& rng) {
  Wx.init_gaussian(stddev, rng);
  Wh.init_gaussian(stddev, rng);
  std::fill(b.value.begin(), b.value.end(), 0.0);
  // Forget gate opens at init so the cell state carries gradient across time.
  for (std::size_t j = 0; j < hidden_dim_; ++j) b.value[hidden_dim_ + j] = 1.0;
}

LstmState LstmCell::initial_state() const {
  return LstmState{Vec(hidden_dim_, 0.0), Vec(hidden_dim_, 0.0)};
}

LstmState LstmCell::step(const LstmState& state, std::span<const double> x,
                         LstmStepCache* cache) const {
  const std::size_t H = hidden_dim_;
  if (x.size() != input_dim_ || state.c.size() != H || state.h.size() != H) {
    throw std::invalid_argument("LstmCell::step: size mismatch");
  }

  // Pre-activations for all four gates, laid out [i | f | o | g].
  Vec a = b.value;
  {
    const double* w = Wx.value.data();
    for (std::size_t i = 0; i < input_dim_; ++i) {
      const double xi = x[i];
      const double* row = w + i * 4 * H;
      for (std::size_t j = 0; j < 4 * H; ++j) a[j] += row[j] * xi;
    }
    const double* u = Wh.value.data();
    for (std::size_t i = 0; i < H; ++i) {
      const double hi = state.h[i];
      const double* row = u + i * 4 * H;
      for (std::size_t j = 0; j < 4 * H; ++j) a[j] += row[j] * hi;
    }
  }

  Vec gi(H), gf(H), go(H), gg(H);
  for (std::size_t j = 0; j < H; ++j) {
    gi[j] = sigmoid(a[j]);
    gf[j] = sigmoid(a[H + j]);
    go[j] = sigmoid(a[2 * H + j]);
    gg[j] = std::tanh(a[3 * H + j]);
  }

  LstmState out;
  out.c.resize(H);
  out.h.resize(H);
  Vec tanh_c(H);
  for (std::size_t j = 0; j < H; ++j) {
    out.c[j] = gf[j] * state.c[j] + gi[j] * gg[j];
    tanh_c[j] = std::tanh(out.c[j]);
    out.h[j] = go[j] * tanh_c[j];
  }

  if (cache != nullptr) {
    cache->x.assign(x.begin(), x.end());
    cache->c_prev = state.c;
    cache->h_prev = state.h;
    cache->i = std::move(gi);
    cache->f = std::move(gf);
    cache->o = std::move(go);
    cache->g = std::move(gg);
    cache->c = out.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return out;
}

void LstmCell::backward(const LstmStepCache& cache, std::span<const double> dh,
                        std::span<const double> dc, Vec& dx, Vec& dh_prev, Vec& dc_prev) {
  const std::size_t H = hidden_dim_;
  if (dh.size() != H || dc.size() != H) throw std::invalid_argument("LstmCell::backward: size mismatch");

  // Gradients on gate pre-activations, laid out like the forward [i|f|o|g].
  Vec da(4 * H);
  dc_prev.assign(H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    const double d_c = dc[j] + dh[j] * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
    const double d_i = d_c * cache.g[j];
    const double d_f = d_c * cache.c_prev[j];
    const double d_o = dh[j] * cache.tanh_c[j];
    const double d_g = d_c * cache.i[j];
    da[j] = d_i * cache.i[j] * (1.0 - cache.i[j]);
    da[H + j] = d_f * cache.f[j] * (1.0 - cache.f[j]);
    da[2 * H + j] = d_o * cache.o[j] * (1.0 - cache.o[j]);
    da[3 * H + j] = d_g * (1.0 - cache.g[j] * cache.g[j]);
    dc_prev[j] = d_c * cache.f[j];
  }

  dx.assign(input_dim_, 0.0);
  {
    const double* w = Wx.value.data();
    double* dw = Wx.grad.data();
    for (std::size_t i = 0; i < input_dim_; ++i) {
      const double xi = cache.x[i];
      const double* row = w + i * 4 * H;
      double* drow = dw + i * 4 * H;
      double acc = 0.0;
      for (std::size_t j = 0; j < 4 * H; ++j) {
        drow[j] += xi * da[j];
        acc += row[j] * da[j];
      }
      dx[i] = acc;
    }
  }
  dh_prev.assign(H, 0.0);
  {
    const double* u = Wh.value.data();
    double* du = Wh.grad.data();
    for (std::size_t i = 0; i < H; ++i) {
      const double hi = cache.h_prev[i];
      const double* row = u + i * 4 * H;
      double* drow = du + i * 4 * H;
      double acc = 0.0;
      for (std::size_t j = 0; j < 4 * H; ++j) {
        drow[j] += hi * da[j];
        acc += row[j] * da[j];
      }
      dh_prev[i] = acc;
    }
  }
  for (std::size_t j = 0; j < 4 * H; ++j) b.grad[j] += da[j];
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - m);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy_loss(std::span<const double> logits, int label, Vec* probs_out) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("cross_entropy_loss: label out of range");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double loss = std::log(sum) - (logits[static_cast<std::size_t>(label)] - m);
  if (probs_out != nullptr) {
    probs_out->resize(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j)
      (*probs_out)[j] = std::exp(logits[j] - m) / sum;
  }
  return loss;
}

Vec cross_entropy_grad(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("cross_entropy_grad: label out of range");
  }
  Vec g(probs.begin(), probs.end());
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

double smoothed_l1_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("smoothed_l1_loss: size mismatch");
  double loss = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) loss += smoothed_l1(pred[j] - target[j]);
  return loss;
}

Vec smoothed_l1_loss_grad(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("smoothed_l1_loss_grad: size mismatch");
  }
  Vec g(pred.size());
  for (std::size_t j = 0; j < pred.size(); ++j) g[j] = smoothed_l1_grad(pred[j] - target[j]);
  return g;
}

SgdMomentum::SgdMomentum(double learning_rate, double momentum)
    : lr_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("SgdMomentum: learning rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("SgdMomentum: momentum must lie in [0, 1)");
  }
}

void SgdMomentum::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("SgdMomentum: learning rate must be > 0");
  lr_ = lr;
}

void SgdMomentum::set_grad_clip(double max_global_norm) { grad_clip_ = max_global_norm; }

void SgdMomentum::step(std::span<Tensor* const> params) {
  // Validate before mutating anything so a bad gradient leaves parameters and
  // velocities untouched.
  double sq_norm = 0.0;
  for (const Tensor* t : params) {
    for (double g : t->grad) {
      if (!std::isfinite(g)) {
        throw std::runtime_error("SgdMomentum::step: non-finite gradient in tensor '" + t->name +
                                 "'");
      }
      sq_norm += g * g;
    }
  }
  double scale = 1.0;
  if (grad_clip_ > 0.0) {
    const double norm = std::sqrt(sq_norm);
    if (norm > grad_clip_) scale = grad_clip_ / norm;
  }
  for (Tensor* t : params) {
    Vec& v = velocity_[t->name];
    if (v.size() != t->size()) v.assign(t->size(), 0.0);
    for (std::size_t j = 0; j < t->size(); ++j) {
      v[j] = momentum_ * v[j] - lr_ * scale * t->grad[j];
      t->value[j] += v[j];
    }
  }
}

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           std::span<Tensor* const> params, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw std::invalid_argument("grad_check: epsilon must lie in [1e-6, 1e-3]");
  }
  GradCheckReport report;
  for (Tensor* t : params) {
    for (std::size_t j = 0; j < t->size(); ++j) {
      const double saved = t->value[j];
      t->value[j] = saved + epsilon;
      const double lp = loss_fn();
      t->value[j] = saved - epsilon;
      const double lm = loss_fn();
      t->value[j] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw std::runtime_error("grad_check: non-finite loss while perturbing tensor '" + t->name +
                                 "'");
      }
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double analytic = t->grad[j];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = t->name;
        report.worst_index = j;
      }
    }
  }
  return report;
}

}  // namespace tubekit
