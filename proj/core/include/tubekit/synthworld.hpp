#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/nncore.hpp"

namespace tubekit {

// ---------------------------------------------------------------------------
// Motion programs
// ---------------------------------------------------------------------------

enum class MotionKind : std::uint8_t { linear, sinusoidal, scale_change, random_walk };

const char* motion_kind_name(MotionKind kind);
MotionKind motion_kind_from_name(std::string_view name);

// Deterministic trajectory generator for one object. box_at() is the pure
// (unclamped) trajectory; rollout applies frame clamping on top of it.
struct MotionProgram {
  MotionKind kind{MotionKind::linear};
  double vx{0.0}, vy{0.0};        // drift velocity, px/frame
  double amp_x{0.0}, amp_y{0.0};  // sinusoidal amplitude, px
  double period{10.0};            // sinusoidal period, frames
  double phase{0.0};              // sinusoidal phase, radians
  double scale_rate{1.0};         // per-frame size ratio (scale_change)
  double walk_std{0.0};           // random_walk segment velocity std, px/frame
  int segment_len{5};             // random_walk frames per constant-velocity segment
  std::uint64_t walk_seed{0};

  // Box at frame offset t >= 0 from the initial box, before clamping.
  // box_at(initial, 0) == initial for every kind; for scale_change,
  // w_t / w_0 == scale_rate^t.
  Box box_at(const Box& initial, int t) const;
};

// ---------------------------------------------------------------------------
// Tracks and videos
// ---------------------------------------------------------------------------

struct ObjectTrack {
  int class_id{0};                  // in [0, num_classes)
  std::uint64_t appearance_seed{0};
  MotionProgram motion;
  std::vector<Box> boxes;           // one per frame, clamped into the frame
  std::vector<bool> visibility;     // one per frame

  bool visible_all(int first_frame, int count) const;
};

// Parameters of the feature oracle, the stand-in for a trained convolutional
// feature extractor. Features are pure functions of (video, box, frame):
// deterministic codes passed through a fixed random linear projection, plus
// Gaussian noise whose seed depends only on the video seed, the frame, and
// the box quantized to 0.25 px.
struct FeatureOracleParams {
  int feature_dim{32};
  std::uint64_t projection_seed{7};
  double noise_std{0.15};
  double receptive_radius{90.0};  // px; objects with centers farther away are invisible
  int class_signal_dim{8};        // >= number of classes
  int appearance_dim{8};
  bool temporal_ambiguity{true};

  bool operator==(const FeatureOracleParams&) const = default;
};

struct ProposalSet {
  int frame{0};
  std::vector<Box> boxes;
};

struct SyntheticVideo {
  double width{480.0};
  double height{270.0};
  int frames{0};
  int num_classes{1};
  std::uint64_t seed{0};  // noise/proposal streams derive from this
  FeatureOracleParams oracle;
  std::vector<ObjectTrack> tracks;
  std::vector<ProposalSet> proposals;

  const ProposalSet* proposals_at(int frame) const;
};

// World generation config. Objects never exceed the frame (validated) and
// rolled-out boxes are clamped to stay inside with sizes >= min_box_size.
struct WorldConfig {
  double width{480.0};
  double height{270.0};
  int frames{41};
  int num_classes{5};
  int tracks_per_video{5};
  double min_object_size{24.0};
  double max_object_size{56.0};
  double speed_min{2.0};
  double speed_max{7.0};
  double min_box_size{4.0};
  double occlusion_fraction{0.3};  // fraction of tracks given a hidden interval
  std::vector<MotionKind> motion_kinds{MotionKind::linear, MotionKind::sinusoidal,
                                       MotionKind::scale_change, MotionKind::random_walk};
  FeatureOracleParams oracle;

  bool operator==(const WorldConfig&) const = default;
};

// Generates a video deterministically from (config, seed): identical inputs
// yield identical tracks, and later identical features. Track classes cycle
// round-robin so every class appears when tracks_per_video >= num_classes.
// Throws ConfigError for infeasible configs (object larger than frame, no
// motion kinds, class_signal_dim < num_classes).
SyntheticVideo generate_video(const WorldConfig& config, std::uint64_t seed);

// Index of the visible track with the highest IoU against `box` at `frame`,
// provided that IoU exceeds min_iou; -1 otherwise. Ties keep the lowest
// track index.
int match_track(const SyntheticVideo& video, const Box& box, int frame, double min_iou = 0.5);

// ---------------------------------------------------------------------------
// Static proposals
// ---------------------------------------------------------------------------

struct ProposalConfig {
  int per_object{3};
  int background{3};
  double center_jitter{0.1};  // std of center offset, relative to object size
  double size_jitter{0.05};    // std of log size offset

  bool operator==(const ProposalConfig&) const = default;
};

// Jittered copies of each ground-truth box visible at `frame` plus uniform
// background boxes, all clamped into the frame. Deterministic in `seed`.
std::vector<Box> static_proposals(const SyntheticVideo& video, int frame,
                                  const ProposalConfig& config, std::uint64_t seed);

// Adds proposal sets for every frame of the video, seeded per frame from the
// video seed.
void attach_proposals(SyntheticVideo& video, const ProposalConfig& config);

// ---------------------------------------------------------------------------
// Feature oracle
// ---------------------------------------------------------------------------

// Deterministic feature extractor for one video. Construction precomputes the
// projection matrices and per-track appearance codes; pooling then depends
// only on ground truth within the receptive radius of the pooled box center,
// so distant objects cannot influence a feature.
class FeatureOracle {
 public:
  explicit FeatureOracle(const SyntheticVideo& video);

  const SyntheticVideo& video() const { return *video_; }
  int feature_dim() const { return video_->oracle.feature_dim; }

  // Movement-regression features: FixedProjection(appearance code of the
  // nearest visible track within the receptive radius ++ relative-geometry
  // code [(gx-x)/w, (gy-y)/h, log(gw/w), log(gh/h)]) + noise; the projected
  // background code + noise when no track is in range. The geometry code
  // enters linearly, so movement targets are a linear function of noiseless
  // features whenever the pooled box size matches the matched track's size.
  Vec regression_features(const Box& box, int frame) const;
  std::vector<Vec> regression_features(std::span<const Box> boxes, int frame) const;

  // Classification features: FixedProjection(class direction scaled by
  // IoU(box, best ground truth) ++ temporal-phase channel ++ background
  // channel) + noise. Under temporal ambiguity the designated class pair
  // shares one direction and differs only in its phase pattern over time.
  Vec classification_features(const Box& box, int frame) const;
  std::vector<Vec> classification_features(std::span<const Box> boxes, int frame) const;

  // Pre-projection codes, exposed for tests and diagnostics.
  Vec regression_code(const Box& box, int frame) const;
  Vec classification_code(const Box& box, int frame) const;

  // Phase channel value of a class at a frame. Without temporal ambiguity
  // every class is constant 1. With it, the designated pair (num_classes-2,
  // num_classes-1) gets complementary square waves with equal duty cycle:
  // the pair is indistinguishable frame-marginally but separable over time.
  double phase_value(int class_id, int frame) const;
  static constexpr int kPhasePeriod = 4;

  // The pair of class ids that shares a direction under temporal ambiguity.
  std::pair<int, int> ambiguous_pair() const;

 private:
  struct FrameContext;

  const SyntheticVideo* video_;
  std::vector<Vec> appearance_codes_;   // per track
  std::vector<double> projection_reg_;  // [feature_dim, appearance_dim + 4]
  std::vector<double> projection_cls_;  // [feature_dim, class_signal_dim + 2]
  Vec background_reg_code_;

  Vec project_reg(std::span<const double> code) const;
  Vec project_cls(std::span<const double> code) const;
  Vec noise(const Box& box, int frame, std::uint64_t tag) const;
  FrameContext frame_context(int frame) const;
  Vec regression_code_in(const FrameContext&, const Box& box) const;
  Vec classification_code_in(const FrameContext&, const Box& box, int frame) const;
};

// ---------------------------------------------------------------------------
// Dataset container
// ---------------------------------------------------------------------------

// One self-describing JSON file per video: format/version header, world
// geometry, oracle parameters, seeds, tracks (class, motion, visibility,
// per-frame boxes) and proposal sets. Doubles round-trip bit-exactly.
// Loading rejects unknown keys and malformed geometry.
void save_video(const SyntheticVideo& video, const std::filesystem::path& path);
SyntheticVideo load_video(const std::filesystem::path& path);

}  // namespace tubekit
