#include "tubekit/tpn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tubekit/checkpoint.hpp"
#include "tubekit/errors.hpp"
#include "tubekit/rng.hpp"

namespace tubekit {

std::vector<TrainingSample> build_training_corpus(const SyntheticVideo& video,
                                                  const FeatureOracle& oracle, int window,
                                                  int frame_stride, int video_index,
                                                  CorpusStats* stats) {
  if (window < 2) throw ConfigError("training corpus: window must be >= 2");
  if (frame_stride < 1) throw ConfigError("training corpus: frame_stride must be >= 1");
  const int feature_dim = video.oracle.feature_dim;

  std::vector<TrainingSample> corpus;
  for (int start = 0; start + window <= video.frames; start += frame_stride) {
    const ProposalSet* proposals = video.proposals_at(start);
    if (proposals == nullptr) continue;

    for (const Box& proposal : proposals->boxes) {
      if (stats != nullptr) ++stats->windows_considered;

      const int matched = match_track(video, proposal, start);
      if (matched < 0) {
        if (stats != nullptr) ++stats->dropped_no_match;
        continue;
      }
      const ObjectTrack& track = video.tracks[static_cast<std::size_t>(matched)];
      if (!track.visible_all(start, window)) {
        if (stats != nullptr) ++stats->dropped_visibility;
        continue;
      }

      TrainingSample sample;
      sample.video_index = video_index;
      sample.start_frame = start;
      sample.track_index = matched;
      sample.anchor = proposal;
      sample.features.reserve(static_cast<std::size_t>(window) * feature_dim);
      for (int t = 0; t < window; ++t) {
        const Vec f = oracle.regression_features(proposal, start + t);
        sample.features.insert(sample.features.end(), f.begin(), f.end());
      }
      const Box& g0 = track.boxes[static_cast<std::size_t>(start)];
      sample.targets.reserve(4 * static_cast<std::size_t>(window - 1));
      for (int t = 1; t < window; ++t) {
        const MovementDelta d =
            encode_movement(g0, track.boxes[static_cast<std::size_t>(start + t)]);
        sample.targets.push_back(d.dx);
        sample.targets.push_back(d.dy);
        sample.targets.push_back(d.dw);
        sample.targets.push_back(d.dh);
      }
      corpus.push_back(std::move(sample));
    }
  }
  return corpus;
}

Vec NormalizationStats::normalize(const Vec& raw) const {
  if (raw.size() != mean.size()) {
    throw std::invalid_argument("NormalizationStats::normalize: size mismatch");
  }
  Vec out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - mean[j]) / stddev[j];
  return out;
}

Vec NormalizationStats::denormalize(const Vec& normalized) const {
  if (normalized.size() != mean.size()) {
    throw std::invalid_argument("NormalizationStats::denormalize: size mismatch");
  }
  Vec out(normalized.size());
  for (std::size_t j = 0; j < normalized.size(); ++j) out[j] = normalized[j] * stddev[j] + mean[j];
  return out;
}

NormalizationStats compute_normalization_stats(const std::vector<TrainingSample>& corpus,
                                               int window) {
  if (corpus.empty()) throw ConfigError("normalization stats: empty corpus");
  const std::size_t dim = 4 * static_cast<std::size_t>(window - 1);
  for (const TrainingSample& s : corpus) {
    if (s.targets.size() != dim) {
      throw std::invalid_argument("normalization stats: target size does not match window");
    }
  }

  NormalizationStats stats;
  stats.window = window;
  stats.mean.assign(dim, 0.0);
  stats.stddev.assign(dim, 0.0);
  const double n = static_cast<double>(corpus.size());
  for (const TrainingSample& s : corpus) {
    for (std::size_t j = 0; j < dim; ++j) stats.mean[j] += s.targets[j];
  }
  for (std::size_t j = 0; j < dim; ++j) stats.mean[j] /= n;
  for (const TrainingSample& s : corpus) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = s.targets[j] - stats.mean[j];
      stats.stddev[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    stats.stddev[j] = std::max(std::sqrt(stats.stddev[j] / n), NormalizationStats::kStdFloor);
  }
  return stats;
}

TpnModel block_init(const TpnModel& two_frame, int window) {
  if (two_frame.window != 2) throw std::invalid_argument("block_init: source must be 2-frame");
  if (window < 2) throw std::invalid_argument("block_init: window must be >= 2");
  const std::size_t f = static_cast<std::size_t>(two_frame.feature_dim);
  if (two_frame.layer.in_dim() != 2 * f || two_frame.layer.out_dim() != 4) {
    throw std::invalid_argument("block_init: source layer has unexpected shape");
  }

  TpnModel out;
  out.window = window;
  out.feature_dim = two_frame.feature_dim;
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t out_dim = 4 * (w - 1);
  out.layer = DenseLayer(w * f, out_dim, "tpn-w" + std::to_string(window));

  // Source weights: rows [0, f) act on anchor-frame features, rows [f, 2f)
  // on the offset-frame features. Output block t-1 (movement to frame
  // offset t) receives the anchor rows at input rows [0, f) and the offset
  // rows at input rows [t*f, (t+1)*f).
  const Vec& src = two_frame.layer.W.value;  // [2f, 4] row-major
  Vec& dst = out.layer.W.value;              // [w*f, out_dim] row-major
  for (std::size_t t = 1; t < w; ++t) {
    const std::size_t col0 = 4 * (t - 1);
    for (std::size_t r = 0; r < f; ++r) {
      for (std::size_t k = 0; k < 4; ++k) {
        dst[r * out_dim + col0 + k] = src[r * 4 + k];
        dst[(t * f + r) * out_dim + col0 + k] = src[(f + r) * 4 + k];
      }
    }
  }
  for (std::size_t t = 1; t < w; ++t) {
    for (std::size_t k = 0; k < 4; ++k) {
      out.layer.b.value[4 * (t - 1) + k] = two_frame.layer.b.value[k];
    }
  }

  out.stats.window = window;
  out.stats.mean.reserve(out_dim);
  out.stats.stddev.reserve(out_dim);
  for (std::size_t t = 1; t < w; ++t) {
    out.stats.mean.insert(out.stats.mean.end(), two_frame.stats.mean.begin(),
                          two_frame.stats.mean.end());
    out.stats.stddev.insert(out.stats.stddev.end(), two_frame.stats.stddev.begin(),
                            two_frame.stats.stddev.end());
  }
  return out;
}

namespace {

void validate_corpus(const std::vector<TrainingSample>& corpus, int window, int feature_dim) {
  const std::size_t in_dim = static_cast<std::size_t>(window) * feature_dim;
  const std::size_t out_dim = 4 * static_cast<std::size_t>(window - 1);
  for (const TrainingSample& s : corpus) {
    if (s.features.size() != in_dim || s.targets.size() != out_dim) {
      throw std::invalid_argument("train_tpn: sample dimensions do not match the window");
    }
  }
}

}  // namespace

TpnTrainResult train_tpn(const std::vector<TrainingSample>& corpus, const TpnTrainConfig& config,
                         const TpnModel* init_from, const Logger& logger) {
  if (config.window < 2) throw ConfigError("train_tpn: window must be >= 2");
  if (config.epochs < 0) throw ConfigError("train_tpn: epochs must be >= 0");
  if (config.batch_size < 1) throw ConfigError("train_tpn: batch_size must be >= 1");
  if (corpus.empty()) throw ConfigError("train_tpn: empty corpus");
  if (corpus.front().features.size() % static_cast<std::size_t>(config.window) != 0) {
    throw std::invalid_argument("train_tpn: feature size is not a multiple of the window");
  }
  const int feature_dim =
      static_cast<int>(corpus.front().features.size() / static_cast<std::size_t>(config.window));
  validate_corpus(corpus, config.window, feature_dim);

  TpnTrainResult result;
  TpnModel& model = result.model;
  if (init_from != nullptr) {
    if (init_from->window != config.window || init_from->feature_dim != feature_dim) {
      throw std::invalid_argument("train_tpn: init model does not match window or features");
    }
    model = *init_from;
  } else {
    model.window = config.window;
    model.feature_dim = feature_dim;
    model.layer = DenseLayer(static_cast<std::size_t>(config.window) * feature_dim,
                             4 * static_cast<std::size_t>(config.window - 1),
                             "tpn-w" + std::to_string(config.window));
    auto init_rng = make_rng(config.seed, stream_tag("tpn-init"));
    model.layer.W.init_gaussian(config.init_std, init_rng);
    model.stats = compute_normalization_stats(corpus, config.window);
  }

  std::vector<Vec> normalized(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    normalized[i] = model.stats.normalize(corpus[i].targets);
  }

  SgdMomentum opt(config.learning_rate, config.momentum);
  opt.set_grad_clip(config.grad_clip);
  Tensor* params[] = {&model.layer.W, &model.layer.b};

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto shuffle_rng = make_rng(config.seed, stream_tag("tpn-shuffle"));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size();
         first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t last =
          std::min(order.size(), first + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(last - first);
      model.layer.W.zero_grad();
      model.layer.b.zero_grad();
      for (std::size_t k = first; k < last; ++k) {
        const TrainingSample& s = corpus[order[k]];
        const Vec y = model.layer.forward(s.features);
        epoch_loss += smoothed_l1_loss(y, normalized[order[k]]);
        Vec dy = smoothed_l1_loss_grad(y, normalized[order[k]]);
        for (double& v : dy) v *= inv_batch;
        model.layer.backward(s.features, dy);
      }
      opt.step(params);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(corpus.size()));
    LogLine("train-tpn")
        .kv("window", config.window)
        .kv("epoch", epoch)
        .kv("loss", result.epoch_losses.back())
        .emit(logger);
  }
  return result;
}

double corpus_loss(const TpnModel& model, const std::vector<TrainingSample>& corpus) {
  if (corpus.empty()) throw ConfigError("corpus_loss: empty corpus");
  double total = 0.0;
  for (const TrainingSample& s : corpus) {
    const Vec y = model.layer.forward(s.features);
    total += smoothed_l1_loss(y, model.stats.normalize(s.targets));
  }
  return total / static_cast<double>(corpus.size());
}

Vec predict_movements(const TpnModel& model, const Vec& features) {
  if (features.size() != model.layer.in_dim()) {
    throw std::invalid_argument("predict_movements: feature size mismatch");
  }
  return model.stats.denormalize(model.layer.forward(features));
}

MovementDelta movement_at(const Vec& raw_movements, int offset_index) {
  const std::size_t base = 4 * static_cast<std::size_t>(offset_index);
  if (offset_index < 0 || base + 4 > raw_movements.size()) {
    throw std::invalid_argument("movement_at: offset out of range");
  }
  return MovementDelta{raw_movements[base], raw_movements[base + 1], raw_movements[base + 2],
                       raw_movements[base + 3], DeltaKind::raw};
}

void save_tpn_model(const TpnModel& model, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.set_meta("kind", "tpn");
  ckpt.set_meta_int("window", model.window);
  ckpt.set_meta_int("feature_dim", model.feature_dim);
  ckpt.add(model.layer.W);
  ckpt.add(model.layer.b);
  const std::size_t dim = model.stats.mean.size();
  ckpt.add("stats.mean", {dim}, model.stats.mean);
  ckpt.add("stats.stddev", {dim}, model.stats.stddev);
  ckpt.save(path);
}

TpnModel load_tpn_model(const std::filesystem::path& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  if (ckpt.meta_at("kind") != "tpn") throw ConfigError("checkpoint is not a movement regressor");
  TpnModel model;
  model.window = static_cast<int>(ckpt.meta_int("window"));
  model.feature_dim = static_cast<int>(ckpt.meta_int("feature_dim"));
  if (model.window < 2 || model.feature_dim < 1) {
    throw ConfigError("checkpoint has invalid window or feature_dim");
  }
  model.layer = DenseLayer(static_cast<std::size_t>(model.window) * model.feature_dim,
                           4 * static_cast<std::size_t>(model.window - 1),
                           "tpn-w" + std::to_string(model.window));
  ckpt.restore(model.layer.W);
  ckpt.restore(model.layer.b);
  model.stats.window = model.window;
  model.stats.mean = ckpt.at("stats.mean").values;
  model.stats.stddev = ckpt.at("stats.stddev").values;
  const std::size_t dim = 4 * static_cast<std::size_t>(model.window - 1);
  if (model.stats.mean.size() != dim || model.stats.stddev.size() != dim) {
    throw ConfigError("checkpoint stats do not match the window");
  }
  for (double s : model.stats.stddev) {
    if (!(s >= NormalizationStats::kStdFloor)) {
      throw ConfigError("checkpoint stats contain an invalid stddev");
    }
  }
  return model;
}

}  // namespace tubekit
