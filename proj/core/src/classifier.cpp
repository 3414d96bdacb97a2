#include "tubekit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tubekit/checkpoint.hpp"
#include "tubekit/errors.hpp"
#include "tubekit/rng.hpp"

namespace tubekit {

const char* classifier_mode_name(ClassifierMode mode) {
  switch (mode) {
    case ClassifierMode::per_frame_linear: return "per_frame_linear";
    case ClassifierMode::vanilla_lstm: return "vanilla_lstm";
    case ClassifierMode::encoder_decoder: return "encoder_decoder";
  }
  throw std::invalid_argument("classifier_mode_name: unknown mode");
}

ClassifierMode classifier_mode_from_name(std::string_view name) {
  if (name == "per_frame_linear") return ClassifierMode::per_frame_linear;
  if (name == "vanilla_lstm") return ClassifierMode::vanilla_lstm;
  if (name == "encoder_decoder") return ClassifierMode::encoder_decoder;
  throw ConfigError("unknown classifier mode: " + std::string(name));
}

TemporalClassifier::TemporalClassifier(ClassifierMode mode, int feature_dim, int hidden_dim,
                                       int num_classes)
    : mode_(mode), feature_dim_(feature_dim), hidden_dim_(hidden_dim), num_classes_(num_classes) {
  if (feature_dim < 1 || num_classes < 1) {
    throw std::invalid_argument("TemporalClassifier: invalid dimensions");
  }
  const std::size_t f = static_cast<std::size_t>(feature_dim);
  const std::size_t labels = static_cast<std::size_t>(num_labels());
  if (mode == ClassifierMode::per_frame_linear) {
    hidden_dim_ = 0;
    head_ = DenseLayer(f, labels, "cls.head");
    return;
  }
  if (hidden_dim < 1) throw std::invalid_argument("TemporalClassifier: invalid hidden dim");
  const std::size_t h = static_cast<std::size_t>(hidden_dim);
  encoder_ = LstmCell(f, h, "cls.encoder");
  if (mode == ClassifierMode::encoder_decoder) decoder_ = LstmCell(f, h, "cls.decoder");
  head_ = DenseLayer(h, labels, "cls.head");
}

void TemporalClassifier::init_gaussian(double stddev, std::mt19937_64& rng) {
  if (mode_ != ClassifierMode::per_frame_linear) {
    encoder_.init_gaussian(stddev, rng);
    if (mode_ == ClassifierMode::encoder_decoder) decoder_.init_gaussian(stddev, rng);
  }
  head_.init_gaussian(stddev, rng);
}

std::vector<Tensor*> TemporalClassifier::parameters() {
  std::vector<Tensor*> params;
  if (mode_ != ClassifierMode::per_frame_linear) {
    params.push_back(&encoder_.Wx);
    params.push_back(&encoder_.Wh);
    params.push_back(&encoder_.b);
    if (mode_ == ClassifierMode::encoder_decoder) {
      params.push_back(&decoder_.Wx);
      params.push_back(&decoder_.Wh);
      params.push_back(&decoder_.b);
    }
  }
  params.push_back(&head_.W);
  params.push_back(&head_.b);
  return params;
}

std::vector<const Tensor*> TemporalClassifier::parameters() const {
  const std::vector<Tensor*> mutable_params = const_cast<TemporalClassifier*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<Vec> TemporalClassifier::forward(const std::vector<Vec>& features,
                                             ClassifierCache* cache) const {
  const std::size_t frames = features.size();
  if (frames == 0) throw std::invalid_argument("TemporalClassifier: empty sequence");
  for (const Vec& f : features) {
    if (f.size() != static_cast<std::size_t>(feature_dim_)) {
      throw std::invalid_argument("TemporalClassifier: feature size mismatch");
    }
  }
  if (cache != nullptr) {
    *cache = ClassifierCache{};
    cache->features = features;
  }

  std::vector<Vec> head_inputs(frames);
  switch (mode_) {
    case ClassifierMode::per_frame_linear:
      head_inputs = features;
      break;
    case ClassifierMode::vanilla_lstm: {
      if (cache != nullptr) cache->encoder_steps.resize(frames);
      LstmState state = encoder_.initial_state();
      for (std::size_t t = 0; t < frames; ++t) {
        state = encoder_.step(state, features[t],
                              cache != nullptr ? &cache->encoder_steps[t] : nullptr);
        head_inputs[t] = state.h;
      }
      break;
    }
    case ClassifierMode::encoder_decoder: {
      if (cache != nullptr) {
        cache->encoder_steps.resize(frames);
        cache->decoder_steps.resize(frames);
      }
      LstmState state = encoder_.initial_state();
      for (std::size_t t = 0; t < frames; ++t) {
        state = encoder_.step(state, features[t],
                              cache != nullptr ? &cache->encoder_steps[t] : nullptr);
      }
      // The decoder starts from the encoder's final state and revisits the
      // sequence in reverse, so its step j scores frame frames-1-j.
      for (std::size_t j = 0; j < frames; ++j) {
        const std::size_t frame = frames - 1 - j;
        state = decoder_.step(state, features[frame],
                              cache != nullptr ? &cache->decoder_steps[j] : nullptr);
        head_inputs[frame] = state.h;
      }
      break;
    }
  }

  std::vector<Vec> logits(frames);
  for (std::size_t t = 0; t < frames; ++t) logits[t] = head_.forward(head_inputs[t]);
  if (cache != nullptr) {
    cache->head_inputs = head_inputs;
    cache->logits = logits;
  }
  return logits;
}

std::vector<Vec> TemporalClassifier::classify(const std::vector<Vec>& features) const {
  std::vector<Vec> out = forward(features);
  for (Vec& logits : out) logits = softmax(logits);
  return out;
}

void TemporalClassifier::backward(const ClassifierCache& cache,
                                  const std::vector<Vec>& dlogits) {
  const std::size_t frames = cache.logits.size();
  if (dlogits.size() != frames || frames == 0) {
    throw std::invalid_argument("TemporalClassifier::backward: gradient size mismatch");
  }

  std::vector<Vec> dhead_inputs(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    dhead_inputs[t] = head_.backward(cache.head_inputs[t], dlogits[t]);
  }
  if (mode_ == ClassifierMode::per_frame_linear) return;

  const std::size_t h = static_cast<std::size_t>(hidden_dim_);
  Vec dh_next(h, 0.0), dc_next(h, 0.0);
  Vec dx, dh_prev, dc_prev;

  if (mode_ == ClassifierMode::encoder_decoder) {
    // Decoder runs first in backward order; its step j scored frame
    // frames-1-j. The gradient that flows out of its first step lands on the
    // encoder's final state.
    for (std::size_t j = frames; j-- > 0;) {
      Vec dh = dhead_inputs[frames - 1 - j];
      for (std::size_t k = 0; k < h; ++k) dh[k] += dh_next[k];
      decoder_.backward(cache.decoder_steps[j], dh, dc_next, dx, dh_prev, dc_prev);
      dh_next = dh_prev;
      dc_next = dc_prev;
    }
    for (std::size_t t = frames; t-- > 0;) {
      encoder_.backward(cache.encoder_steps[t], dh_next, dc_next, dx, dh_prev, dc_prev);
      dh_next = dh_prev;
      dc_next = dc_prev;
    }
    return;
  }

  // vanilla_lstm
  for (std::size_t t = frames; t-- > 0;) {
    Vec dh = dhead_inputs[t];
    for (std::size_t k = 0; k < h; ++k) dh[k] += dh_next[k];
    encoder_.backward(cache.encoder_steps[t], dh, dc_next, dx, dh_prev, dc_prev);
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

void validate_sequences(const std::vector<SequenceSample>& corpus, int num_labels) {
  if (corpus.empty()) throw ConfigError("train_classifier: empty corpus");
  for (const SequenceSample& s : corpus) {
    if (s.features.empty() || s.features.size() != s.labels.size()) {
      throw std::invalid_argument("train_classifier: features and labels must align");
    }
    for (int label : s.labels) {
      if (label < 0 || label >= num_labels) {
        throw std::invalid_argument("train_classifier: label out of range");
      }
    }
  }
}

}  // namespace

ClassifierTrainResult train_classifier(const std::vector<SequenceSample>& corpus,
                                       const ClassifierTrainConfig& config,
                                       const Logger& logger) {
  if (config.iterations < 0) throw ConfigError("train_classifier: iterations must be >= 0");
  if (config.batch_size < 1) throw ConfigError("train_classifier: batch_size must be >= 1");
  if (corpus.empty()) throw ConfigError("train_classifier: empty corpus");
  const int feature_dim = static_cast<int>(corpus.front().features.front().size());

  // The label alphabet: explicit class count when configured, otherwise the
  // largest label present; background (0) is always a valid label.
  int num_classes = config.num_classes;
  if (num_classes <= 0) {
    int max_label = 0;
    for (const SequenceSample& s : corpus) {
      for (int label : s.labels) max_label = std::max(max_label, label);
    }
    num_classes = std::max(1, max_label);
  }
  validate_sequences(corpus, num_classes + 1);

  ClassifierTrainResult result;
  result.model = TemporalClassifier(config.mode, feature_dim, config.hidden_dim, num_classes);
  auto init_rng = make_rng(config.seed, stream_tag("cls-init"));
  result.model.init_gaussian(config.init_std, init_rng);

  SgdMomentum opt(config.learning_rate, config.momentum);
  opt.set_grad_clip(config.grad_clip);
  const std::vector<Tensor*> params = result.model.parameters();

  std::vector<std::size_t> queue(corpus.size());
  std::iota(queue.begin(), queue.end(), std::size_t{0});
  auto shuffle_rng = make_rng(config.seed, stream_tag("cls-shuffle"));
  std::shuffle(queue.begin(), queue.end(), shuffle_rng);
  std::size_t cursor = 0;

  double lr = config.learning_rate;
  for (int iter = 0; iter < config.iterations; ++iter) {
    if (config.decay_every > 0 && iter > 0 && iter % config.decay_every == 0) {
      lr *= config.lr_decay;
      opt.set_learning_rate(lr);
    }

    for (Tensor* p : params) p->zero_grad();
    std::size_t batch_frames = 0;
    std::vector<std::pair<std::size_t, ClassifierCache>> caches;
    caches.reserve(static_cast<std::size_t>(config.batch_size));
    for (int k = 0; k < config.batch_size; ++k) {
      if (cursor == queue.size()) {
        std::shuffle(queue.begin(), queue.end(), shuffle_rng);
        cursor = 0;
      }
      const std::size_t idx = queue[cursor++];
      batch_frames += corpus[idx].features.size();
      caches.emplace_back(idx, ClassifierCache{});
    }

    double batch_loss = 0.0;
    const double inv_frames = 1.0 / static_cast<double>(batch_frames);
    for (auto& [idx, cache] : caches) {
      const SequenceSample& s = corpus[idx];
      const std::vector<Vec> logits = result.model.forward(s.features, &cache);
      std::vector<Vec> dlogits(logits.size());
      for (std::size_t t = 0; t < logits.size(); ++t) {
        Vec probs;
        batch_loss += cross_entropy_loss(logits[t], s.labels[t], &probs);
        dlogits[t] = cross_entropy_grad(probs, s.labels[t]);
        for (double& v : dlogits[t]) v *= inv_frames;
      }
      result.model.backward(cache, dlogits);
    }
    opt.step(params);

    result.iteration_losses.push_back(batch_loss * inv_frames);
    if ((iter + 1) % 50 == 0 || iter + 1 == config.iterations) {
      LogLine("train-classifier")
          .kv("mode", classifier_mode_name(config.mode))
          .kv("iteration", iter + 1)
          .kv("loss", result.iteration_losses.back())
          .emit(logger);
    }
  }
  return result;
}

double classifier_loss(const TemporalClassifier& model,
                       const std::vector<SequenceSample>& corpus) {
  if (corpus.empty()) throw ConfigError("classifier_loss: empty corpus");
  double total = 0.0;
  std::size_t frames = 0;
  for (const SequenceSample& s : corpus) {
    const std::vector<Vec> logits = model.forward(s.features);
    for (std::size_t t = 0; t < logits.size(); ++t) {
      total += cross_entropy_loss(logits[t], s.labels[t]);
    }
    frames += s.features.size();
  }
  return total / static_cast<double>(frames);
}

// ---------------------------------------------------------------------------
// Tubelet glue
// ---------------------------------------------------------------------------

std::vector<int> label_tubelet_frames(const TubeletProposal& tubelet,
                                      const SyntheticVideo& video) {
  std::vector<int> labels;
  labels.reserve(tubelet.boxes.size());
  for (std::size_t t = 0; t < tubelet.boxes.size(); ++t) {
    const int frame = tubelet.anchor_frame + static_cast<int>(t);
    if (frame < 0 || frame >= video.frames) {
      throw std::invalid_argument("label_tubelet_frames: tubelet leaves the video");
    }
    const int best = match_track(video, tubelet.boxes[t], frame);
    labels.push_back(best < 0 ? 0 : video.tracks[static_cast<std::size_t>(best)].class_id + 1);
  }
  return labels;
}

std::vector<SequenceSample> build_sequence_samples(const std::vector<TubeletProposal>& tubelets,
                                                   const FeatureOracle& oracle) {
  std::vector<SequenceSample> out;
  out.reserve(tubelets.size());
  for (const TubeletProposal& tp : tubelets) {
    SequenceSample s;
    s.features.reserve(tp.boxes.size());
    for (std::size_t t = 0; t < tp.boxes.size(); ++t) {
      s.features.push_back(
          oracle.classification_features(tp.boxes[t], tp.anchor_frame + static_cast<int>(t)));
    }
    s.labels = label_tubelet_frames(tp, oracle.video());
    out.push_back(std::move(s));
  }
  return out;
}

void apply_scores(std::vector<TubeletProposal>& tubelets, const TemporalClassifier& model,
                  const FeatureOracle& oracle) {
  for (TubeletProposal& tp : tubelets) {
    std::vector<Vec> features;
    features.reserve(tp.boxes.size());
    for (std::size_t t = 0; t < tp.boxes.size(); ++t) {
      features.push_back(
          oracle.classification_features(tp.boxes[t], tp.anchor_frame + static_cast<int>(t)));
    }
    tp.scores = model.classify(features);
  }
}

// ---------------------------------------------------------------------------
// Checkpoint round trip
// ---------------------------------------------------------------------------

void save_classifier(const TemporalClassifier& model, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.set_meta("kind", "classifier");
  ckpt.set_meta("mode", classifier_mode_name(model.mode()));
  ckpt.set_meta_int("feature_dim", model.feature_dim());
  ckpt.set_meta_int("hidden_dim", model.hidden_dim());
  ckpt.set_meta_int("num_classes", model.num_classes());
  for (const Tensor* t : model.parameters()) ckpt.add(*t);
  ckpt.save(path);
}

TemporalClassifier load_classifier(const std::filesystem::path& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  if (ckpt.meta_at("kind") != "classifier") throw ConfigError("checkpoint is not a classifier");
  TemporalClassifier model(classifier_mode_from_name(ckpt.meta_at("mode")),
                           static_cast<int>(ckpt.meta_int("feature_dim")),
                           static_cast<int>(ckpt.meta_int("hidden_dim")),
                           static_cast<int>(ckpt.meta_int("num_classes")));
  for (Tensor* t : model.parameters()) ckpt.restore(*t);
  return model;
}

}  // namespace tubekit
