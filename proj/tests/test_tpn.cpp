#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tubekit/tpn.hpp"

using namespace tubekit;

namespace {

WorldConfig corpus_world(double noise_std, double size_jitter_unused = 0.0) {
  (void)size_jitter_unused;
  WorldConfig config;
  config.frames = 21;
  config.oracle.noise_std = noise_std;
  return config;
}

std::vector<TrainingSample> make_corpus(const WorldConfig& world, const ProposalConfig& proposals,
                                        int videos, int window, int frame_stride,
                                        std::uint64_t seed0) {
  std::vector<TrainingSample> corpus;
  for (int v = 0; v < videos; ++v) {
    SyntheticVideo video = generate_video(world, seed0 + static_cast<std::uint64_t>(v));
    attach_proposals(video, proposals);
    const FeatureOracle oracle(video);
    std::vector<TrainingSample> part =
        build_training_corpus(video, oracle, window, frame_stride, v);
    corpus.insert(corpus.end(), part.begin(), part.end());
  }
  return corpus;
}

}  // namespace

TEST_SUITE("tpn") {
  TEST_CASE("training corpus windows have consistent shapes and matched targets") {
    const WorldConfig world = corpus_world(0.15);
    SyntheticVideo video = generate_video(world, 31);
    attach_proposals(video, ProposalConfig{});
    const FeatureOracle oracle(video);
    CorpusStats stats;
    const std::vector<TrainingSample> corpus =
        build_training_corpus(video, oracle, 5, 2, 0, &stats);
    REQUIRE(!corpus.empty());
    CHECK(stats.windows_considered > 0);
    for (const TrainingSample& s : corpus) {
      CHECK(s.features.size() == static_cast<std::size_t>(5 * world.oracle.feature_dim));
      CHECK(s.targets.size() == 16);  // 4 * (window - 1)
      REQUIRE(s.track_index >= 0);
      const ObjectTrack& track = video.tracks[static_cast<std::size_t>(s.track_index)];
      CHECK(iou(s.anchor, track.boxes[s.start_frame]) > 0.5);
      CHECK(track.visible_all(s.start_frame, 5));
      // Targets are the track's own raw movements from its anchor-frame box.
      for (int t = 1; t < 5; ++t) {
        const MovementDelta expect =
            encode_movement(track.boxes[s.start_frame], track.boxes[s.start_frame + t]);
        const std::size_t base = static_cast<std::size_t>(4 * (t - 1));
        CHECK(s.targets[base + 0] == doctest::Approx(expect.dx).epsilon(1e-12));
        CHECK(s.targets[base + 1] == doctest::Approx(expect.dy).epsilon(1e-12));
        CHECK(s.targets[base + 2] == doctest::Approx(expect.dw).epsilon(1e-12));
        CHECK(s.targets[base + 3] == doctest::Approx(expect.dh).epsilon(1e-12));
      }
      // Anchors sit on the configured stride.
      CHECK(s.start_frame % 2 == 0);
      CHECK(s.start_frame + 5 <= video.frames);
    }
  }

  TEST_CASE("normalization round trip and corpus moments") {
    const WorldConfig world = corpus_world(0.15);
    const std::vector<TrainingSample> corpus =
        make_corpus(world, ProposalConfig{}, 3, 5, 2, 100);
    REQUIRE(corpus.size() > 10);
    const NormalizationStats stats = compute_normalization_stats(corpus, 5);
    REQUIRE(stats.mean.size() == 16);

    // Round trip: denormalize(normalize(x)) == x within 1e-12.
    double worst = 0.0;
    for (const TrainingSample& s : corpus) {
      const Vec back = stats.denormalize(stats.normalize(s.targets));
      for (std::size_t i = 0; i < back.size(); ++i)
        worst = std::max(worst, std::abs(back[i] - s.targets[i]));
    }
    CHECK(worst < 1e-12);

    // Normalized corpus has mean 0 and population std 1 per component.
    Vec mean(16, 0.0), sq(16, 0.0);
    for (const TrainingSample& s : corpus) {
      const Vec n = stats.normalize(s.targets);
      for (std::size_t i = 0; i < 16; ++i) {
        mean[i] += n[i];
        sq[i] += n[i] * n[i];
      }
    }
    const double count = static_cast<double>(corpus.size());
    for (std::size_t i = 0; i < 16; ++i) {
      mean[i] /= count;
      const double var = sq[i] / count - mean[i] * mean[i];
      CHECK(std::abs(mean[i]) < 1e-10);
      CHECK(std::abs(std::sqrt(std::max(var, 0.0)) - 1.0) < 1e-10);
    }
  }

  TEST_CASE("normalization floors degenerate stddev") {
    std::vector<TrainingSample> corpus(3);
    for (TrainingSample& s : corpus) s.targets = {0.5, 0.5, 0.5, 0.5};  // zero variance
    const NormalizationStats stats = compute_normalization_stats(corpus, 2);
    for (double sd : stats.stddev) CHECK(sd >= NormalizationStats::kStdFloor);
    const Vec n = stats.normalize(corpus[0].targets);
    for (double v : n) CHECK(std::isfinite(v));
    const Vec back = stats.denormalize(n);
    for (double v : back) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("block init reproduces the two-frame model exactly") {
    const WorldConfig world = corpus_world(0.15);
    const std::vector<TrainingSample> corpus2 =
        make_corpus(world, ProposalConfig{}, 2, 2, 1, 200);
    TpnTrainConfig tc;
    tc.window = 2;
    tc.epochs = 30;
    tc.seed = 7;
    const TpnModel two = train_tpn(corpus2, tc).model;

    for (const int window : {3, 5, 11}) {
      const TpnModel wide = block_init(two, window);
      CHECK(wide.window == window);
      CHECK(wide.stats.mean.size() == static_cast<std::size_t>(4 * (window - 1)));
      std::mt19937_64 rng(900 + static_cast<std::uint64_t>(window));
      std::normal_distribution<double> dist(0.0, 1.0);
      const int f = two.feature_dim;
      for (int rep = 0; rep < 20; ++rep) {
        Vec features(static_cast<std::size_t>(window * f));
        for (double& v : features) v = dist(rng);
        const Vec wide_raw = predict_movements(wide, features);
        for (int t = 1; t < window; ++t) {
          // Two-frame input: anchor frame features ++ offset frame features.
          Vec pair(static_cast<std::size_t>(2 * f));
          for (int i = 0; i < f; ++i) {
            pair[static_cast<std::size_t>(i)] = features[static_cast<std::size_t>(i)];
            pair[static_cast<std::size_t>(f + i)] = features[static_cast<std::size_t>(t * f + i)];
          }
          const Vec two_raw = predict_movements(two, pair);
          for (int c = 0; c < 4; ++c) {
            // Bit-exact: inserted zero weights contribute exact zeros.
            CHECK(wide_raw[static_cast<std::size_t>(4 * (t - 1) + c)] ==
                  two_raw[static_cast<std::size_t>(c)]);
          }
        }
      }
    }
  }

  TEST_CASE("training is deterministic and reduces the loss") {
    const WorldConfig world = corpus_world(0.15);
    const std::vector<TrainingSample> corpus =
        make_corpus(world, ProposalConfig{}, 3, 2, 2, 300);
    TpnTrainConfig tc;
    tc.window = 2;
    tc.epochs = 40;
    tc.seed = 21;
    const TpnTrainResult a = train_tpn(corpus, tc);
    const TpnTrainResult b = train_tpn(corpus, tc);
    CHECK(a.model.layer.W.value == b.model.layer.W.value);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(a.epoch_losses.back() < a.epoch_losses.front());
    CHECK(corpus_loss(a.model, corpus) == doctest::Approx(a.epoch_losses.back()).epsilon(0.25));

    TpnTrainConfig other = tc;
    other.seed = 22;
    const TpnTrainResult c = train_tpn(corpus, other);
    CHECK(a.model.layer.W.value != c.model.layer.W.value);
  }

  TEST_CASE("fine-tuning from an init model keeps its normalization stats") {
    const WorldConfig world = corpus_world(0.15);
    const std::vector<TrainingSample> corpus2 =
        make_corpus(world, ProposalConfig{}, 2, 2, 1, 400);
    TpnTrainConfig tc2;
    tc2.window = 2;
    tc2.epochs = 20;
    tc2.seed = 5;
    const TpnModel two = train_tpn(corpus2, tc2).model;
    const TpnModel five = block_init(two, 5);

    const std::vector<TrainingSample> corpus5 =
        make_corpus(world, ProposalConfig{}, 2, 5, 2, 400);
    TpnTrainConfig tc5;
    tc5.window = 5;
    tc5.epochs = 10;
    tc5.seed = 6;
    const TpnModel tuned = train_tpn(corpus5, tc5, &five).model;
    CHECK(tuned.stats.mean == five.stats.mean);
    CHECK(tuned.stats.stddev == five.stats.stddev);
  }

  TEST_CASE("noiseless linear regime: least squares fits movement targets") {
    // Exact-realizability regime: no feature noise, no size jitter, single
    // track; targets are then exactly linear in the pooled features.
    WorldConfig world;
    world.frames = 21;
    world.width = 960.0;
    world.height = 540.0;
    world.tracks_per_video = 1;
    world.speed_min = 1.0;
    world.speed_max = 3.0;
    world.occlusion_fraction = 0.0;
    world.oracle.noise_std = 0.0;
    ProposalConfig proposals;
    proposals.size_jitter = 0.0;

    std::vector<TrainingSample> corpus = make_corpus(world, proposals, 6, 2, 1, 500);
    if (corpus.size() > 500) corpus.resize(500);
    REQUIRE(corpus.size() >= 300);

    std::vector<Vec> rows, targets;
    for (const TrainingSample& s : corpus) {
      rows.push_back(s.features);
      targets.push_back(s.targets);
    }
    const std::vector<Vec> coeffs = oracles::least_squares_fit(rows, targets, 1e-10);
    double worst = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t o = 0; o < 4; ++o) {
        const double pred = oracles::ls_predict(coeffs[o], rows[r]);
        worst = std::max(worst, std::abs(pred - targets[r][o]));
      }
    }
    CHECK(worst < 1e-8);
  }

  TEST_CASE("movement_at unpacks the per-offset layout") {
    Vec raw = {0.1, 0.2, 0.3, 0.4, -0.1, -0.2, -0.3, -0.4};
    const MovementDelta m0 = movement_at(raw, 0);
    const MovementDelta m1 = movement_at(raw, 1);
    CHECK(m0.dx == 0.1);
    CHECK(m0.dh == 0.4);
    CHECK(m1.dx == -0.1);
    CHECK(m1.dh == -0.4);
  }

  TEST_CASE("model checkpoint round trip is exact") {
    const WorldConfig world = corpus_world(0.15);
    const std::vector<TrainingSample> corpus =
        make_corpus(world, ProposalConfig{}, 2, 2, 2, 600);
    TpnTrainConfig tc;
    tc.window = 2;
    tc.epochs = 15;
    tc.seed = 9;
    const TpnModel model = train_tpn(corpus, tc).model;
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "tubekit_test_tpn.json";
    save_tpn_model(model, path);
    const TpnModel loaded = load_tpn_model(path);
    std::filesystem::remove(path);
    CHECK(loaded.window == model.window);
    CHECK(loaded.feature_dim == model.feature_dim);
    CHECK(loaded.layer.W.value == model.layer.W.value);
    CHECK(loaded.layer.b.value == model.layer.b.value);
    CHECK(loaded.stats.mean == model.stats.mean);
    CHECK(loaded.stats.stddev == model.stats.stddev);
  }
}
