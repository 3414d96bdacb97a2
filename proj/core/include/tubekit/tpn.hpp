#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/log.hpp"
#include "tubekit/nncore.hpp"
#include "tubekit/synthworld.hpp"

namespace tubekit {

// One training window for the movement regressor: a proposal box at an anchor
// frame, features pooled at that same box location on every frame of the
// window, and the matched track's raw movements relative to its own
// anchor-frame box.
struct TrainingSample {
  int video_index{0};
  int start_frame{0};
  int track_index{0};
  Box anchor;    // the proposal box the features were pooled at
  Vec features;  // window * feature_dim, frame-major
  Vec targets;   // 4 * (window - 1) raw movement components
};

struct CorpusStats {
  int windows_considered{0};
  int dropped_no_match{0};    // no visible track overlaps the proposal enough
  int dropped_visibility{0};  // matched track leaves the window
};

// Builds every training window of length `window` from one video: anchors at
// frames {0, frame_stride, 2*frame_stride, ...} where the full window fits,
// one candidate per proposal box at the anchor frame. A proposal joins the
// corpus when some track visible at the anchor has IoU > 0.5 with it
// (argmax, ties to the lower track index) and that track stays visible for
// the whole window.
std::vector<TrainingSample> build_training_corpus(const SyntheticVideo& video,
                                                  const FeatureOracle& oracle, int window,
                                                  int frame_stride, int video_index = 0,
                                                  CorpusStats* stats = nullptr);

// Per-frame-offset, per-component affine normalization of movement targets.
// stddev is the population standard deviation floored at kStdFloor;
// denormalize is the exact inverse of normalize.
struct NormalizationStats {
  int window{2};
  Vec mean;    // 4 * (window - 1)
  Vec stddev;  // 4 * (window - 1)

  static constexpr double kStdFloor = 1e-6;

  Vec normalize(const Vec& raw) const;
  Vec denormalize(const Vec& normalized) const;
};

NormalizationStats compute_normalization_stats(const std::vector<TrainingSample>& corpus,
                                               int window);

// Movement regressor: one dense layer from window*feature_dim pooled features
// to 4*(window-1) normalized movements, plus the stats that map its outputs
// back to raw movement space. The stats belong to the model: training
// normalizes targets with the model's own stats.
struct TpnModel {
  int window{2};
  int feature_dim{0};
  DenseLayer layer;
  NormalizationStats stats;
};

// Expands a trained 2-frame regressor to a `window`-frame one without
// retraining. Writing the 2-frame weight rows for the anchor frame and the
// offset frame into each output block (zeros elsewhere) makes every output
// block reproduce the 2-frame model applied to (anchor frame, offset frame)
// exactly, bit for bit: forward() accumulates over inputs in ascending index
// order and the inserted zeros contribute exact zero terms. The biases are
// tiled and the 2-frame stats are tiled with them, so decoded movements keep
// their meaning.
TpnModel block_init(const TpnModel& two_frame, int window);

struct TpnTrainConfig {
  int window{2};
  int epochs{10};
  int batch_size{32};
  double learning_rate{0.02};
  double momentum{0.9};
  double init_std{0.01};
  double grad_clip{0.0};  // global-norm bound; <= 0 disables
  std::uint64_t seed{0};
};

struct TpnTrainResult {
  TpnModel model;
  std::vector<double> epoch_losses;  // mean per-sample smoothed L1, by epoch
};

// Minibatch SGD with momentum on the smoothed L1 loss between the layer
// output and normalized targets. When `init_from` is given, training starts
// from a copy of it (keeping its normalization stats); otherwise weights are
// Gaussian(init_std) and stats come from the corpus. Deterministic in
// (corpus, config, init_from).
TpnTrainResult train_tpn(const std::vector<TrainingSample>& corpus, const TpnTrainConfig& config,
                         const TpnModel* init_from = nullptr, const Logger& logger = nullptr);

// Mean per-sample loss of the model on a corpus, in the model's normalized
// target space; the quantity train_tpn minimizes.
double corpus_loss(const TpnModel& model, const std::vector<TrainingSample>& corpus);

// De-normalized movement components, 4 * (window - 1), for features pooled
// the same way as in training.
Vec predict_movements(const TpnModel& model, const Vec& features);

// Raw movement for one frame offset (offset_index in [0, window-1)) out of a
// predict_movements() result.
MovementDelta movement_at(const Vec& raw_movements, int offset_index);

// Checkpoint round trip: weights, bias, and normalization stats.
void save_tpn_model(const TpnModel& model, const std::filesystem::path& path);
TpnModel load_tpn_model(const std::filesystem::path& path);

}  // namespace tubekit
