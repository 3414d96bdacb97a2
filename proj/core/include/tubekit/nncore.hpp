#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tubekit {

using Vec = std::vector<double>;

// Named parameter tensor with a gradient buffer of the same shape. All
// arithmetic is double precision with fixed accumulation order, so identical
// seeds give bit-identical results.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  Vec value;
  Vec grad;

  Tensor() = default;
  Tensor(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return value.size(); }
  void zero_grad();
  void init_gaussian(double stddev, std::mt19937_64& rng);
};

// Affine map y = W^T x + b with W stored row-major as [in_dim, out_dim].
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim, std::string name);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }

  void init_gaussian(double stddev, std::mt19937_64& rng);

  Vec forward(std::span<const double> x) const;

  // Accumulates dW, db for the given (input, output-gradient) pair and
  // returns the gradient with respect to the input.
  Vec backward(std::span<const double> x, std::span<const double> dy);

  Tensor W;
  Tensor b;

 private:
  std::size_t in_dim_{0};
  std::size_t out_dim_{0};
};

struct LstmState {
  Vec c;
  Vec h;
};

// Intermediates of one LSTM step, kept for backpropagation through time.
struct LstmStepCache {
  Vec x, c_prev, h_prev;
  Vec i, f, o, g;  // gate activations
  Vec c, tanh_c;
};

// Single-layer LSTM cell with gate order (input, forget, output, candidate):
//   i = sigma(a_i)  f = sigma(a_f)  o = sigma(a_o)  g = tanh(a_g)
//   a_* = Wx_*^T x + Wh_*^T h_prev + b_*
//   c = f .* c_prev + i .* g        h = o .* tanh(c)
// With f, i in (0, 1) and |g| < 1, |c_t| <= |c_{t-1}| + 1 per step.
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(std::size_t input_dim, std::size_t hidden_dim, std::string name_prefix);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  void init_gaussian(double stddev, std::mt19937_64& rng);

  LstmState initial_state() const;  // zero vectors

  // Advances one step. When `cache` is non-null the intermediates needed by
  // backward() are stored there.
  LstmState step(const LstmState& state, std::span<const double> x,
                 LstmStepCache* cache = nullptr) const;

  // Backpropagates one step. `dh`/`dc` are the loss gradients flowing into
  // this step's outputs; parameter gradients are accumulated and the
  // gradients for the step inputs are written to dx, dh_prev, dc_prev.
  void backward(const LstmStepCache& cache, std::span<const double> dh,
                std::span<const double> dc, Vec& dx, Vec& dh_prev, Vec& dc_prev);

  Tensor Wx;  // [input_dim, 4H]
  Tensor Wh;  // [hidden_dim, 4H]
  Tensor b;   // [4H]

 private:
  std::size_t input_dim_{0};
  std::size_t hidden_dim_{0};
};

// Numerically stable softmax (max-subtracted); output sums to 1.
Vec softmax(std::span<const double> logits);

// Cross-entropy of softmax(logits) against an integer label. When
// `probs_out` is non-null the softmax probabilities are stored there.
double cross_entropy_loss(std::span<const double> logits, int label, Vec* probs_out = nullptr);

// Gradient of cross_entropy_loss with respect to the logits: probs - onehot.
Vec cross_entropy_grad(std::span<const double> probs, int label);

// Sum over components of the smoothed L1 penalty of (pred - target), and its
// gradient with respect to pred.
double smoothed_l1_loss(std::span<const double> pred, std::span<const double> target);
Vec smoothed_l1_loss_grad(std::span<const double> pred, std::span<const double> target);

// SGD with classical (heavy-ball) momentum:
//   v <- momentum * v - lr * grad        param <- param + v
// Velocities are keyed by tensor name and zero-initialized on first use.
// Optional global-norm gradient clipping scales all gradients so their joint
// L2 norm is at most the configured bound before the update. A non-finite
// gradient aborts the step (no parameter is touched) with an error naming the
// offending tensor.
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr);
  void set_grad_clip(double max_global_norm);  // <= 0 disables

  void step(std::span<Tensor* const> params);

 private:
  double lr_;
  double momentum_;
  double grad_clip_{0.0};
  std::map<std::string, Vec, std::less<>> velocity_;
};

struct GradCheckReport {
  double max_rel_error{0.0};
  std::string worst_tensor;
  std::size_t worst_index{0};
};

// Central-difference gradient check. The caller runs its backward pass first
// so every tensor's `grad` holds the analytic gradient of `loss_fn` at the
// current parameters; this routine then perturbs each parameter entry by
// +/-epsilon and reports the maximum relative error
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// epsilon must lie in [1e-6, 1e-3]; a non-finite loss raises an error.
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           std::span<Tensor* const> params, double epsilon);

}  // namespace tubekit
