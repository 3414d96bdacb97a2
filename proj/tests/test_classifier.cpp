#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tubekit/classifier.hpp"

using namespace tubekit;

namespace {

std::map<std::string, const Tensor*> tensor_map(const TemporalClassifier& model) {
  std::map<std::string, const Tensor*> out;
  for (const Tensor* t : model.parameters()) out[t->name] = t;
  return out;
}

Vec dense_forward(const Tensor& W, const Tensor& b, const Vec& x) {
  const std::size_t out_dim = b.value.size();
  Vec y = b.value;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out_dim; ++j) y[j] += x[i] * W.value[i * out_dim + j];
  return y;
}

// Two-class corpus whose classes share every frame-marginal statistic (both
// waves have 50% duty cycle) and differ only in wave shape over time: class 1
// holds for two frames per period, class 2 alternates every frame. Any
// three-frame window separates them regardless of alignment; one frame never
// does. The (bias, wave) code passes through a fixed random projection so the
// signal is spread across channels the way a pooled feature would be.
// Labels are 1 and 2.
std::vector<SequenceSample> phase_pair_corpus(int sequences, int frames, std::uint64_t seed) {
  constexpr int kDim = 32;
  std::mt19937_64 prng(12345);
  std::normal_distribution<double> pw(0.0, 0.7);
  std::vector<double> projection(kDim * 2);
  for (double& v : projection) v = pw(prng);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> offset(0, 3);
  std::vector<SequenceSample> corpus;
  for (int s = 0; s < sequences; ++s) {
    const int cls = 1 + coin(rng);
    const int start = offset(rng);  // anchor at any wave alignment
    SequenceSample sample;
    for (int t = 0; t < frames; ++t) {
      const int f = start + t;
      const double wave = cls == 1 ? (f % 4 < 2 ? 1.0 : 0.0) : (f % 2 == 0 ? 1.0 : 0.0);
      Vec feature(kDim, 0.0);
      for (int i = 0; i < kDim; ++i)
        feature[static_cast<std::size_t>(i)] =
            projection[static_cast<std::size_t>(i * 2)] +
            projection[static_cast<std::size_t>(i * 2 + 1)] * wave + noise(rng);
      sample.features.push_back(std::move(feature));
      sample.labels.push_back(cls);
    }
    corpus.push_back(std::move(sample));
  }
  return corpus;
}

// Linearly separable corpus: each class owns a coordinate axis.
std::vector<SequenceSample> separable_corpus(int sequences, int frames, int classes,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_int_distribution<int> pick(1, classes);
  std::vector<SequenceSample> corpus;
  for (int s = 0; s < sequences; ++s) {
    const int cls = pick(rng);
    SequenceSample sample;
    for (int t = 0; t < frames; ++t) {
      Vec f(static_cast<std::size_t>(classes) + 1, 0.0);
      f[static_cast<std::size_t>(cls - 1)] = 1.0;
      for (double& v : f) v += noise(rng);
      sample.features.push_back(std::move(f));
      sample.labels.push_back(cls);
    }
    corpus.push_back(std::move(sample));
  }
  return corpus;
}

double frame_accuracy(const TemporalClassifier& model,
                      const std::vector<SequenceSample>& corpus) {
  int hits = 0, total = 0;
  for (const SequenceSample& s : corpus) {
    const std::vector<Vec> probs = model.classify(s.features);
    for (std::size_t t = 0; t < probs.size(); ++t) {
      const auto best = std::max_element(probs[t].begin(), probs[t].end());
      hits += static_cast<int>(best - probs[t].begin()) == s.labels[t] ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// Full-batch softmax regression on individual frames; the convex reference
// for what a per-frame linear model can achieve.
struct SoftmaxRegression {
  std::vector<Vec> W;  // [labels][dim + 1]

  static SoftmaxRegression fit(const std::vector<SequenceSample>& corpus, int labels,
                               int iterations, double lr) {
    std::size_t dim = corpus.front().features.front().size();
    SoftmaxRegression model;
    model.W.assign(static_cast<std::size_t>(labels), Vec(dim + 1, 0.0));
    for (int it = 0; it < iterations; ++it) {
      std::vector<Vec> grad(static_cast<std::size_t>(labels), Vec(dim + 1, 0.0));
      int count = 0;
      for (const SequenceSample& s : corpus) {
        for (std::size_t t = 0; t < s.features.size(); ++t) {
          const Vec p = softmax(model.logits(s.features[t]));
          for (int c = 0; c < labels; ++c) {
            const double d = p[static_cast<std::size_t>(c)] - (c == s.labels[t] ? 1.0 : 0.0);
            for (std::size_t i = 0; i < dim; ++i)
              grad[static_cast<std::size_t>(c)][i] += d * s.features[t][i];
            grad[static_cast<std::size_t>(c)][dim] += d;
          }
          ++count;
        }
      }
      for (int c = 0; c < labels; ++c)
        for (std::size_t i = 0; i <= dim; ++i)
          model.W[static_cast<std::size_t>(c)][i] -=
              lr * grad[static_cast<std::size_t>(c)][i] / static_cast<double>(count);
    }
    return model;
  }

  Vec logits(const Vec& x) const {
    Vec out(W.size(), 0.0);
    for (std::size_t c = 0; c < W.size(); ++c) {
      for (std::size_t i = 0; i < x.size(); ++i) out[c] += W[c][i] * x[i];
      out[c] += W[c][x.size()];
    }
    return out;
  }

  int predict(const Vec& x) const {
    const Vec l = logits(x);
    return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
  }
};

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("per-frame mode applies the head independently per frame") {
    std::mt19937_64 rng(5);
    TemporalClassifier model(ClassifierMode::per_frame_linear, 3, 8, 2);
    model.init_gaussian(0.3, rng);
    const auto tensors = tensor_map(model);
    REQUIRE(tensors.count("cls.head.W") == 1);
    // Per-frame mode owns no recurrent parameters.
    CHECK(tensors.count("cls.encoder.Wx") == 0);

    const std::vector<Vec> features = {{0.1, -0.2, 0.3}, {1.0, 0.5, -0.5}};
    const std::vector<Vec> logits = model.forward(features);
    REQUIRE(logits.size() == 2);
    for (std::size_t t = 0; t < 2; ++t) {
      const Vec expect =
          dense_forward(*tensors.at("cls.head.W"), *tensors.at("cls.head.b"), features[t]);
      for (std::size_t j = 0; j < expect.size(); ++j)
        CHECK(logits[t][j] == doctest::Approx(expect[j]).epsilon(1e-12));
    }
    // Permuting frames permutes logits: no temporal state.
    const std::vector<Vec> swapped = {features[1], features[0]};
    const std::vector<Vec> swapped_logits = model.forward(swapped);
    CHECK(swapped_logits[0] == logits[1]);
    CHECK(swapped_logits[1] == logits[0]);
  }

  TEST_CASE("vanilla mode matches a reference forward LSTM chain") {
    std::mt19937_64 rng(7);
    TemporalClassifier model(ClassifierMode::vanilla_lstm, 3, 4, 2);
    model.init_gaussian(0.3, rng);
    const auto tensors = tensor_map(model);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Vec> features(5, Vec(3));
    for (Vec& f : features)
      for (double& v : f) v = dist(rng);

    const std::vector<Vec> logits = model.forward(features);
    LstmState state{Vec(4, 0.0), Vec(4, 0.0)};
    for (std::size_t t = 0; t < features.size(); ++t) {
      state = oracles::reference_lstm_step(*tensors.at("cls.encoder.Wx"),
                                           *tensors.at("cls.encoder.Wh"),
                                           *tensors.at("cls.encoder.b"), state, features[t]);
      const Vec expect =
          dense_forward(*tensors.at("cls.head.W"), *tensors.at("cls.head.b"), state.h);
      for (std::size_t j = 0; j < expect.size(); ++j)
        CHECK(logits[t][j] == doctest::Approx(expect[j]).epsilon(1e-12));
    }
  }

  TEST_CASE("encoder-decoder scores frame t from the reverse pass through frame t") {
    std::mt19937_64 rng(9);
    TemporalClassifier model(ClassifierMode::encoder_decoder, 3, 4, 2);
    model.init_gaussian(0.3, rng);
    const auto tensors = tensor_map(model);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Vec> features(6, Vec(3));
    for (Vec& f : features)
      for (double& v : f) v = dist(rng);

    const std::vector<Vec> logits = model.forward(features);

    // Encoder consumes the sequence forward; the decoder starts from the
    // encoder's final (c, h) and consumes it reversed; frame t's logits come
    // from the decoder step that revisits frame t.
    LstmState state{Vec(4, 0.0), Vec(4, 0.0)};
    for (const Vec& f : features)
      state = oracles::reference_lstm_step(*tensors.at("cls.encoder.Wx"),
                                           *tensors.at("cls.encoder.Wh"),
                                           *tensors.at("cls.encoder.b"), state, f);
    for (std::size_t j = 0; j < features.size(); ++j) {
      const std::size_t frame = features.size() - 1 - j;
      state = oracles::reference_lstm_step(*tensors.at("cls.decoder.Wx"),
                                           *tensors.at("cls.decoder.Wh"),
                                           *tensors.at("cls.decoder.b"), state, features[frame]);
      const Vec expect =
          dense_forward(*tensors.at("cls.head.W"), *tensors.at("cls.head.b"), state.h);
      for (std::size_t c = 0; c < expect.size(); ++c)
        CHECK(logits[frame][c] == doctest::Approx(expect[c]).epsilon(1e-12));
    }
  }

  TEST_CASE("encoder-decoder gradients match central differences") {
    std::mt19937_64 rng(11);
    TemporalClassifier model(ClassifierMode::encoder_decoder, 2, 3, 2);
    model.init_gaussian(0.3, rng);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Vec> features(4, Vec(2));
    for (Vec& f : features)
      for (double& v : f) v = dist(rng);
    const std::vector<int> labels = {1, 0, 2, 1};

    auto loss_fn = [&]() {
      const std::vector<Vec> logits = model.forward(features);
      double total = 0.0;
      for (std::size_t t = 0; t < logits.size(); ++t)
        total += cross_entropy_loss(logits[t], labels[t]);
      return total / static_cast<double>(logits.size());
    };

    std::vector<Tensor*> params = model.parameters();
    for (Tensor* t : params) t->zero_grad();
    ClassifierCache cache;
    const std::vector<Vec> logits = model.forward(features, &cache);
    std::vector<Vec> dlogits(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
      Vec probs;
      cross_entropy_loss(logits[t], labels[t], &probs);
      dlogits[t] = cross_entropy_grad(probs, labels[t]);
      for (double& v : dlogits[t]) v /= static_cast<double>(logits.size());
    }
    model.backward(cache, dlogits);
    const GradCheckReport report = grad_check(loss_fn, params, 1e-4);
    CHECK(report.max_rel_error < 1e-4);
  }

  TEST_CASE("zero-initialized model outputs the uniform distribution") {
    TemporalClassifier model(ClassifierMode::encoder_decoder, 3, 4, 3);
    // All parameters default to zero: logits vanish for every frame.
    const std::vector<Vec> features = {{0.4, -0.1, 2.0}, {1.0, 1.0, 1.0}};
    const std::vector<Vec> probs = model.classify(features);
    for (const Vec& p : probs) {
      REQUIRE(p.size() == 4);
      double sum = 0.0;
      for (double v : p) {
        CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("classify distributions sum to one") {
    std::mt19937_64 rng(13);
    TemporalClassifier model(ClassifierMode::vanilla_lstm, 3, 8, 4);
    model.init_gaussian(0.5, rng);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<Vec> features(7, Vec(3));
    for (Vec& f : features)
      for (double& v : f) v = dist(rng);
    for (const Vec& p : model.classify(features)) {
      double sum = 0.0;
      for (double v : p) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }

  TEST_CASE("temporal modes separate the phase pair; the per-frame mode cannot") {
    const std::vector<SequenceSample> train = phase_pair_corpus(96, 8, 21);
    const std::vector<SequenceSample> eval = phase_pair_corpus(48, 8, 22);

    ClassifierTrainConfig config;
    config.hidden_dim = 24;
    config.iterations = 4000;
    config.decay_every = 1500;
    config.batch_size = 16;
    config.seed = 3;

    config.mode = ClassifierMode::encoder_decoder;
    const TemporalClassifier ed = train_classifier(train, config).model;
    CHECK(frame_accuracy(ed, eval) > 0.9);

    config.mode = ClassifierMode::per_frame_linear;
    const TemporalClassifier pf = train_classifier(train, config).model;
    // Frame-marginally the classes are identical; chance is 0.5.
    const double pf_acc = frame_accuracy(pf, eval);
    CHECK(pf_acc > 0.35);
    CHECK(pf_acc < 0.65);
  }

  TEST_CASE("per-frame mode solves linearly separable classes like the convex reference") {
    const std::vector<SequenceSample> train = separable_corpus(64, 6, 3, 31);
    const std::vector<SequenceSample> eval = separable_corpus(32, 6, 3, 32);

    ClassifierTrainConfig config;
    config.mode = ClassifierMode::per_frame_linear;
    config.iterations = 1500;
    config.decay_every = 600;
    config.batch_size = 16;
    config.seed = 5;
    const TemporalClassifier pf = train_classifier(train, config).model;
    CHECK(frame_accuracy(pf, eval) > 0.95);

    const SoftmaxRegression reference = SoftmaxRegression::fit(train, 4, 400, 0.5);
    int agree = 0, total = 0, ref_hits = 0;
    for (const SequenceSample& s : eval) {
      const std::vector<Vec> probs = pf.classify(s.features);
      for (std::size_t t = 0; t < s.features.size(); ++t) {
        const int model_pred = static_cast<int>(
            std::max_element(probs[t].begin(), probs[t].end()) - probs[t].begin());
        const int ref_pred = reference.predict(s.features[t]);
        agree += model_pred == ref_pred ? 1 : 0;
        ref_hits += ref_pred == s.labels[t] ? 1 : 0;
        ++total;
      }
    }
    CHECK(static_cast<double>(ref_hits) / total > 0.95);
    CHECK(static_cast<double>(agree) / total > 0.9);
  }

  TEST_CASE("training is deterministic in corpus and config") {
    const std::vector<SequenceSample> train = phase_pair_corpus(32, 8, 41);
    ClassifierTrainConfig config;
    config.mode = ClassifierMode::vanilla_lstm;
    config.hidden_dim = 8;
    config.iterations = 50;
    config.seed = 7;
    const ClassifierTrainResult a = train_classifier(train, config);
    const ClassifierTrainResult b = train_classifier(train, config);
    CHECK(a.iteration_losses == b.iteration_losses);
    config.seed = 8;
    const ClassifierTrainResult c = train_classifier(train, config);
    CHECK(a.iteration_losses != c.iteration_losses);
  }

  TEST_CASE("tubelet frame labels follow the IoU > 0.5 rule") {
    WorldConfig world;
    world.frames = 13;
    world.occlusion_fraction = 0.0;
    const SyntheticVideo video = generate_video(world, 71);
    const ObjectTrack& track = video.tracks[0];

    TubeletProposal on_track;
    on_track.anchor_frame = 0;
    on_track.boxes.assign(track.boxes.begin(), track.boxes.begin() + 6);
    const std::vector<int> labels = label_tubelet_frames(on_track, video);
    REQUIRE(labels.size() == 6);
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (track.visibility[t]) CHECK(labels[t] == track.class_id + 1);
    }

    TubeletProposal off_track;
    off_track.anchor_frame = 0;
    off_track.boxes.assign(6, Box(4.0, 4.0, 6.0, 6.0));
    for (const int label : label_tubelet_frames(off_track, video)) CHECK(label == 0);
  }

  TEST_CASE("apply_scores attaches normalized per-frame distributions") {
    WorldConfig world;
    world.frames = 9;
    SyntheticVideo video = generate_video(world, 73);
    attach_proposals(video, ProposalConfig{});
    const FeatureOracle oracle(video);

    std::vector<TubeletProposal> tubelets;
    TubeletProposal t;
    t.anchor_frame = 0;
    t.boxes.assign(video.tracks[0].boxes.begin(), video.tracks[0].boxes.begin() + 5);
    tubelets.push_back(t);

    std::mt19937_64 rng(17);
    TemporalClassifier model(ClassifierMode::encoder_decoder, world.oracle.feature_dim, 8,
                             world.num_classes);
    model.init_gaussian(0.2, rng);
    apply_scores(tubelets, model, oracle);
    REQUIRE(tubelets[0].scores.size() == 5);
    for (const Vec& p : tubelets[0].scores) {
      REQUIRE(static_cast<int>(p.size()) == world.num_classes + 1);
      double sum = 0.0;
      for (double v : p) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }

  TEST_CASE("classifier checkpoint round trip reproduces logits exactly") {
    std::mt19937_64 rng(19);
    TemporalClassifier model(ClassifierMode::encoder_decoder, 4, 6, 3);
    model.init_gaussian(0.4, rng);
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "tubekit_test_classifier.json";
    save_classifier(model, path);
    const TemporalClassifier loaded = load_classifier(path);
    std::filesystem::remove(path);

    CHECK(loaded.mode() == model.mode());
    CHECK(loaded.feature_dim() == model.feature_dim());
    CHECK(loaded.hidden_dim() == model.hidden_dim());
    CHECK(loaded.num_classes() == model.num_classes());

    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Vec> features(5, Vec(4));
    for (Vec& f : features)
      for (double& v : f) v = dist(rng);
    const std::vector<Vec> a = model.forward(features);
    const std::vector<Vec> b = loaded.forward(features);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == b[t]);
  }
}
