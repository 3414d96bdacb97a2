#include "tubekit/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "tubekit/errors.hpp"
#include "tubekit/rng.hpp"

namespace tubekit {

namespace {

using json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

double gauss(std::mt19937_64& rng, double stddev) {
  if (!(stddev > 0.0)) return 0.0;
  std::normal_distribution<double> dist(0.0, stddev);
  return dist(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

std::uint64_t quantize_quarter_px(double v) {
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(v * 4.0)));
}

}  // namespace

const char* motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::linear: return "linear";
    case MotionKind::sinusoidal: return "sinusoidal";
    case MotionKind::scale_change: return "scale_change";
    case MotionKind::random_walk: return "random_walk";
  }
  throw std::invalid_argument("motion_kind_name: unknown kind");
}

MotionKind motion_kind_from_name(std::string_view name) {
  if (name == "linear") return MotionKind::linear;
  if (name == "sinusoidal") return MotionKind::sinusoidal;
  if (name == "scale_change") return MotionKind::scale_change;
  if (name == "random_walk") return MotionKind::random_walk;
  throw ConfigError("unknown motion kind: " + std::string(name));
}

Box MotionProgram::box_at(const Box& initial, int t) const {
  if (t < 0) throw std::invalid_argument("MotionProgram::box_at: negative frame offset");
  double cx = initial.x + vx * t;
  double cy = initial.y + vy * t;
  double w = initial.w;
  double h = initial.h;
  switch (kind) {
    case MotionKind::linear:
      break;
    case MotionKind::sinusoidal: {
      const double arg = 2.0 * kPi * static_cast<double>(t) / period + phase;
      const double base = std::sin(phase);
      cx += amp_x * (std::sin(arg) - base);
      cy += amp_y * (std::sin(arg) - base);
      break;
    }
    case MotionKind::scale_change:
      w = initial.w * std::pow(scale_rate, t);
      h = initial.h * std::pow(scale_rate, t);
      break;
    case MotionKind::random_walk: {
      auto rng = make_rng(walk_seed, stream_tag("walk"));
      std::normal_distribution<double> dist(0.0, walk_std);
      const int seg = std::max(1, segment_len);
      int done = 0;
      while (done < t) {
        const double svx = walk_std > 0.0 ? dist(rng) : 0.0;
        const double svy = walk_std > 0.0 ? dist(rng) : 0.0;
        const int span = std::min(seg, t - done);
        cx += svx * span;
        cy += svy * span;
        done += span;
      }
      break;
    }
  }
  return Box(cx, cy, w, h);
}

bool ObjectTrack::visible_all(int first_frame, int count) const {
  if (first_frame < 0 || first_frame + count > static_cast<int>(visibility.size())) return false;
  for (int t = first_frame; t < first_frame + count; ++t) {
    if (!visibility[static_cast<std::size_t>(t)]) return false;
  }
  return true;
}

const ProposalSet* SyntheticVideo::proposals_at(int frame) const {
  for (const ProposalSet& set : proposals) {
    if (set.frame == frame) return &set;
  }
  return nullptr;
}

namespace {

void validate_world(const WorldConfig& c) {
  if (c.width <= 0 || c.height <= 0) throw ConfigError("world: frame sides must be positive");
  if (c.frames < 1) throw ConfigError("world: need at least one frame");
  if (c.num_classes < 1) throw ConfigError("world: need at least one class");
  if (c.tracks_per_video < 1) throw ConfigError("world: need at least one track");
  if (c.motion_kinds.empty()) throw ConfigError("world: motion kind list is empty");
  if (!(c.min_object_size > 0) || c.min_object_size > c.max_object_size) {
    throw ConfigError("world: invalid object size range");
  }
  if (c.max_object_size > std::min(c.width, c.height)) {
    throw ConfigError("world: infeasible config, objects may exceed the frame");
  }
  if (!(c.min_box_size > 0) || c.min_box_size > c.min_object_size) {
    throw ConfigError("world: min_box_size must lie in (0, min_object_size]");
  }
  if (c.occlusion_fraction < 0 || c.occlusion_fraction > 1) {
    throw ConfigError("world: occlusion_fraction must lie in [0, 1]");
  }
  if (c.oracle.feature_dim < c.oracle.appearance_dim + 4 ||
      c.oracle.feature_dim < c.oracle.class_signal_dim + 2) {
    throw ConfigError("world: feature_dim must be at least each code dimension");
  }
  if (c.oracle.class_signal_dim < c.num_classes) {
    throw ConfigError("world: class_signal_dim must be >= num_classes");
  }
  if (c.oracle.appearance_dim < 1) throw ConfigError("world: appearance_dim must be >= 1");
  if (c.oracle.temporal_ambiguity && c.num_classes < 2) {
    throw ConfigError("world: temporal ambiguity needs at least two classes");
  }
  if (!(c.oracle.receptive_radius > 0)) throw ConfigError("world: receptive radius must be > 0");
  if (c.oracle.noise_std < 0) throw ConfigError("world: noise_std must be >= 0");
}

}  // namespace

SyntheticVideo generate_video(const WorldConfig& config, std::uint64_t seed) {
  validate_world(config);

  SyntheticVideo video;
  video.width = config.width;
  video.height = config.height;
  video.frames = config.frames;
  video.num_classes = config.num_classes;
  video.seed = seed;
  video.oracle = config.oracle;

  auto world_rng = make_rng(seed, stream_tag("world"));
  const std::size_t n_kinds = config.motion_kinds.size();
  const std::size_t kind_offset = static_cast<std::size_t>(world_rng() % n_kinds);

  for (int i = 0; i < config.tracks_per_video; ++i) {
    ObjectTrack track;
    track.class_id = i % config.num_classes;
    track.appearance_seed = mix_seed(seed, stream_tag("appearance"), static_cast<std::uint64_t>(i));

    auto rng = make_rng(seed, stream_tag("track"), static_cast<std::uint64_t>(i));
    const double w0 = uniform(rng, config.min_object_size, config.max_object_size);
    const double h0 = uniform(rng, config.min_object_size, config.max_object_size);
    const Box initial(uniform(rng, 0.5 * w0, config.width - 0.5 * w0),
                      uniform(rng, 0.5 * h0, config.height - 0.5 * h0), w0, h0);

    MotionProgram& m = track.motion;
    m.kind = config.motion_kinds[(kind_offset + static_cast<std::size_t>(i)) % n_kinds];
    switch (m.kind) {
      case MotionKind::linear: {
        const double speed = uniform(rng, config.speed_min, config.speed_max);
        const double angle = uniform(rng, 0.0, 2.0 * kPi);
        m.vx = speed * std::cos(angle);
        m.vy = speed * std::sin(angle);
        break;
      }
      case MotionKind::sinusoidal: {
        m.amp_x = uniform(rng, 15.0, 50.0);
        m.amp_y = uniform(rng, 10.0, 30.0);
        m.period = uniform(rng, 8.0, 24.0);
        m.phase = uniform(rng, 0.0, 2.0 * kPi);
        break;
      }
      case MotionKind::scale_change: {
        m.scale_rate = uniform(rng, 0.97, 1.035);
        m.vx = uniform(rng, -2.0, 2.0);
        m.vy = uniform(rng, -2.0, 2.0);
        break;
      }
      case MotionKind::random_walk: {
        m.walk_std = uniform(rng, 2.0, 5.0);
        m.segment_len = 5;
        m.walk_seed = mix_seed(seed, stream_tag("walk-seed"), static_cast<std::uint64_t>(i));
        break;
      }
    }

    track.boxes.reserve(static_cast<std::size_t>(config.frames));
    for (int t = 0; t < config.frames; ++t) {
      track.boxes.push_back(
          clamp_to_frame(m.box_at(initial, t), config.width, config.height, config.min_box_size));
    }

    track.visibility.assign(static_cast<std::size_t>(config.frames), true);
    if (config.occlusion_fraction > 0 && uniform(rng, 0.0, 1.0) < config.occlusion_fraction &&
        config.frames >= 8) {
      std::uniform_int_distribution<int> start_dist(2, config.frames - 6);
      std::uniform_int_distribution<int> len_dist(2, std::max(3, config.frames / 6));
      const int start = start_dist(rng);
      const int len = len_dist(rng);
      for (int t = start; t < std::min(config.frames, start + len); ++t) {
        track.visibility[static_cast<std::size_t>(t)] = false;
      }
    }

    video.tracks.push_back(std::move(track));
  }
  return video;
}

int match_track(const SyntheticVideo& video, const Box& box, int frame, double min_iou) {
  if (frame < 0 || frame >= video.frames) {
    throw std::invalid_argument("match_track: frame out of range");
  }
  int best = -1;
  double best_iou = min_iou;
  for (int ti = 0; ti < static_cast<int>(video.tracks.size()); ++ti) {
    const ObjectTrack& track = video.tracks[static_cast<std::size_t>(ti)];
    if (!track.visibility[static_cast<std::size_t>(frame)]) continue;
    const double v = iou(box, track.boxes[static_cast<std::size_t>(frame)]);
    if (v > best_iou) {
      best = ti;
      best_iou = v;
    }
  }
  return best;
}

std::vector<Box> static_proposals(const SyntheticVideo& video, int frame,
                                  const ProposalConfig& config, std::uint64_t seed) {
  if (frame < 0 || frame >= video.frames) {
    throw std::invalid_argument("static_proposals: frame out of range");
  }
  if (config.per_object < 0 || config.background < 0 || config.center_jitter < 0 ||
      config.size_jitter < 0) {
    throw ConfigError("static_proposals: negative proposal config value");
  }
  auto rng = make_rng(seed);
  std::vector<Box> out;
  for (const ObjectTrack& track : video.tracks) {
    if (!track.visibility[static_cast<std::size_t>(frame)]) continue;
    const Box& g = track.boxes[static_cast<std::size_t>(frame)];
    for (int k = 0; k < config.per_object; ++k) {
      Box b(g.x + gauss(rng, config.center_jitter * g.w),
            g.y + gauss(rng, config.center_jitter * g.h), g.w * std::exp(gauss(rng, config.size_jitter)),
            g.h * std::exp(gauss(rng, config.size_jitter)));
      out.push_back(clamp_to_frame(b, video.width, video.height, 4.0));
    }
  }
  const double max_bg = 0.4 * std::min(video.width, video.height);
  for (int k = 0; k < config.background; ++k) {
    const double w = std::exp(uniform(rng, std::log(12.0), std::log(max_bg)));
    const double h = std::exp(uniform(rng, std::log(12.0), std::log(max_bg)));
    Box b(uniform(rng, 0.5 * w, video.width - 0.5 * w),
          uniform(rng, 0.5 * h, video.height - 0.5 * h), w, h);
    out.push_back(clamp_to_frame(b, video.width, video.height, 4.0));
  }
  return out;
}

void attach_proposals(SyntheticVideo& video, const ProposalConfig& config) {
  video.proposals.clear();
  video.proposals.reserve(static_cast<std::size_t>(video.frames));
  for (int frame = 0; frame < video.frames; ++frame) {
    ProposalSet set;
    set.frame = frame;
    set.boxes = static_proposals(video, frame, config,
                                 mix_seed(video.seed, stream_tag("proposals"),
                                          static_cast<std::uint64_t>(frame)));
    video.proposals.push_back(std::move(set));
  }
}

// ---------------------------------------------------------------------------
// FeatureOracle
// ---------------------------------------------------------------------------

struct FeatureOracle::FrameContext {
  int frame{0};
  // Visible tracks at this frame, ascending track index.
  std::vector<int> track_index;
  std::vector<const Box*> box;
};

FeatureOracle::FeatureOracle(const SyntheticVideo& video) : video_(&video) {
  const FeatureOracleParams& p = video.oracle;
  const int reg_code_dim = p.appearance_dim + 4;
  const int cls_code_dim = p.class_signal_dim + 2;

  {
    auto rng = make_rng(p.projection_seed, stream_tag("projection-reg"));
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(reg_code_dim)));
    projection_reg_.resize(static_cast<std::size_t>(p.feature_dim) * reg_code_dim);
    for (double& v : projection_reg_) v = dist(rng);
  }
  {
    auto rng = make_rng(p.projection_seed, stream_tag("projection-cls"));
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(cls_code_dim)));
    projection_cls_.resize(static_cast<std::size_t>(p.feature_dim) * cls_code_dim);
    for (double& v : projection_cls_) v = dist(rng);
  }
  {
    auto rng = make_rng(p.projection_seed, stream_tag("background-reg"));
    std::normal_distribution<double> dist(0.0, 1.0);
    background_reg_code_.resize(static_cast<std::size_t>(reg_code_dim));
    for (double& v : background_reg_code_) v = dist(rng);
  }
  appearance_codes_.reserve(video.tracks.size());
  for (const ObjectTrack& track : video.tracks) {
    auto rng = make_rng(track.appearance_seed, stream_tag("appearance-code"));
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec code(static_cast<std::size_t>(p.appearance_dim));
    for (double& v : code) v = dist(rng);
    appearance_codes_.push_back(std::move(code));
  }
}

std::pair<int, int> FeatureOracle::ambiguous_pair() const {
  const int c = video_->num_classes;
  return {c - 2, c - 1};
}

double FeatureOracle::phase_value(int class_id, int frame) const {
  if (!video_->oracle.temporal_ambiguity) return 1.0;
  const auto [a, b] = ambiguous_pair();
  if (class_id == a) return (frame % kPhasePeriod) < kPhasePeriod / 2 ? 1.0 : 0.0;
  if (class_id == b) return (frame % 2) == 0 ? 1.0 : 0.0;
  return 1.0;
}

FeatureOracle::FrameContext FeatureOracle::frame_context(int frame) const {
  if (frame < 0 || frame >= video_->frames) {
    throw std::invalid_argument("FeatureOracle: frame out of range");
  }
  FrameContext ctx;
  ctx.frame = frame;
  for (int i = 0; i < static_cast<int>(video_->tracks.size()); ++i) {
    const ObjectTrack& track = video_->tracks[static_cast<std::size_t>(i)];
    if (!track.visibility[static_cast<std::size_t>(frame)]) continue;
    ctx.track_index.push_back(i);
    ctx.box.push_back(&track.boxes[static_cast<std::size_t>(frame)]);
  }
  return ctx;
}

Vec FeatureOracle::project_reg(std::span<const double> code) const {
  const std::size_t f = static_cast<std::size_t>(video_->oracle.feature_dim);
  const std::size_t d = code.size();
  Vec out(f, 0.0);
  for (std::size_t i = 0; i < f; ++i) {
    const double* row = projection_reg_.data() + i * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * code[j];
    out[i] = acc;
  }
  return out;
}

Vec FeatureOracle::project_cls(std::span<const double> code) const {
  const std::size_t f = static_cast<std::size_t>(video_->oracle.feature_dim);
  const std::size_t d = code.size();
  Vec out(f, 0.0);
  for (std::size_t i = 0; i < f; ++i) {
    const double* row = projection_cls_.data() + i * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * code[j];
    out[i] = acc;
  }
  return out;
}

Vec FeatureOracle::noise(const Box& box, int frame, std::uint64_t tag) const {
  const FeatureOracleParams& p = video_->oracle;
  Vec out(static_cast<std::size_t>(p.feature_dim), 0.0);
  if (!(p.noise_std > 0.0)) return out;
  auto rng = make_rng(video_->seed, tag, static_cast<std::uint64_t>(frame),
                      quantize_quarter_px(box.x), quantize_quarter_px(box.y),
                      quantize_quarter_px(box.w), quantize_quarter_px(box.h));
  std::normal_distribution<double> dist(0.0, p.noise_std);
  for (double& v : out) v = dist(rng);
  return out;
}

Vec FeatureOracle::regression_code_in(const FrameContext& ctx, const Box& box) const {
  const FeatureOracleParams& p = video_->oracle;
  // Nearest visible track center within the receptive radius; ties by the
  // strict < keep the lowest track index.
  int best = -1;
  double best_dist = p.receptive_radius;
  for (std::size_t k = 0; k < ctx.box.size(); ++k) {
    const Box& g = *ctx.box[k];
    const double dist = std::hypot(g.x - box.x, g.y - box.y);
    if (dist <= p.receptive_radius && (best < 0 || dist < best_dist)) {
      best = static_cast<int>(k);
      best_dist = dist;
    }
  }
  if (best < 0) return background_reg_code_;
  const Box& g = *ctx.box[static_cast<std::size_t>(best)];
  const Vec& appearance = appearance_codes_[static_cast<std::size_t>(ctx.track_index[
      static_cast<std::size_t>(best)])];
  Vec code;
  code.reserve(appearance.size() + 4);
  code.insert(code.end(), appearance.begin(), appearance.end());
  code.push_back((g.x - box.x) / box.w);
  code.push_back((g.y - box.y) / box.h);
  code.push_back(std::log(g.w / box.w));
  code.push_back(std::log(g.h / box.h));
  return code;
}

Vec FeatureOracle::classification_code_in(const FrameContext& ctx, const Box& box,
                                          int frame) const {
  const FeatureOracleParams& p = video_->oracle;
  const std::size_t dim = static_cast<std::size_t>(p.class_signal_dim) + 2;
  const std::size_t phase_idx = static_cast<std::size_t>(p.class_signal_dim);
  const std::size_t bg_idx = phase_idx + 1;

  int best = -1;
  double best_iou = 0.0;
  for (std::size_t k = 0; k < ctx.box.size(); ++k) {
    const Box& g = *ctx.box[k];
    if (std::hypot(g.x - box.x, g.y - box.y) > p.receptive_radius) continue;
    const double v = iou(box, g);
    if (v > best_iou) {
      best = static_cast<int>(k);
      best_iou = v;
    }
  }

  Vec code(dim, 0.0);
  if (best < 0) {
    code[bg_idx] = 1.0;
    return code;
  }
  const int track_idx = ctx.track_index[static_cast<std::size_t>(best)];
  const int class_id = video_->tracks[static_cast<std::size_t>(track_idx)].class_id;
  int direction = class_id;
  if (p.temporal_ambiguity) {
    const auto [a, b] = ambiguous_pair();
    if (class_id == b) direction = a;  // the pair shares one direction
  }
  code[static_cast<std::size_t>(direction)] = best_iou;
  code[phase_idx] = phase_value(class_id, frame);
  return code;
}

Vec FeatureOracle::regression_code(const Box& box, int frame) const {
  return regression_code_in(frame_context(frame), box);
}

Vec FeatureOracle::classification_code(const Box& box, int frame) const {
  return classification_code_in(frame_context(frame), box, frame);
}

Vec FeatureOracle::regression_features(const Box& box, int frame) const {
  const Box boxes[1] = {box};
  return regression_features(std::span<const Box>(boxes, 1), frame).front();
}

std::vector<Vec> FeatureOracle::regression_features(std::span<const Box> boxes, int frame) const {
  const FrameContext ctx = frame_context(frame);
  std::vector<Vec> out;
  out.reserve(boxes.size());
  for (const Box& box : boxes) {
    Vec feature = project_reg(regression_code_in(ctx, box));
    const Vec n = noise(box, frame, stream_tag("reg-noise"));
    for (std::size_t j = 0; j < feature.size(); ++j) feature[j] += n[j];
    out.push_back(std::move(feature));
  }
  return out;
}

Vec FeatureOracle::classification_features(const Box& box, int frame) const {
  const Box boxes[1] = {box};
  return classification_features(std::span<const Box>(boxes, 1), frame).front();
}

std::vector<Vec> FeatureOracle::classification_features(std::span<const Box> boxes,
                                                        int frame) const {
  const FrameContext ctx = frame_context(frame);
  std::vector<Vec> out;
  out.reserve(boxes.size());
  for (const Box& box : boxes) {
    Vec feature = project_cls(classification_code_in(ctx, box, frame));
    const Vec n = noise(box, frame, stream_tag("cls-noise"));
    for (std::size_t j = 0; j < feature.size(); ++j) feature[j] += n[j];
    out.push_back(std::move(feature));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset container
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kDatasetFormat = "tubekit.dataset";
constexpr int kDatasetVersion = 1;

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  const char* where) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (std::string_view a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

json box_to_json(const Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("dataset: box must be [x, y, w, h]");
  return Box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

}  // namespace

void save_video(const SyntheticVideo& video, const std::filesystem::path& path) {
  json doc;
  doc["format"] = std::string(kDatasetFormat);
  doc["version"] = kDatasetVersion;
  doc["seed"] = video.seed;
  doc["width"] = video.width;
  doc["height"] = video.height;
  doc["frames"] = video.frames;
  doc["num_classes"] = video.num_classes;
  {
    const FeatureOracleParams& p = video.oracle;
    json o;
    o["feature_dim"] = p.feature_dim;
    o["projection_seed"] = p.projection_seed;
    o["noise_std"] = p.noise_std;
    o["receptive_radius"] = p.receptive_radius;
    o["class_signal_dim"] = p.class_signal_dim;
    o["appearance_dim"] = p.appearance_dim;
    o["temporal_ambiguity"] = p.temporal_ambiguity;
    doc["oracle"] = std::move(o);
  }
  json tracks = json::array();
  for (const ObjectTrack& t : video.tracks) {
    json m;
    m["kind"] = motion_kind_name(t.motion.kind);
    m["vx"] = t.motion.vx;
    m["vy"] = t.motion.vy;
    m["amp_x"] = t.motion.amp_x;
    m["amp_y"] = t.motion.amp_y;
    m["period"] = t.motion.period;
    m["phase"] = t.motion.phase;
    m["scale_rate"] = t.motion.scale_rate;
    m["walk_std"] = t.motion.walk_std;
    m["segment_len"] = t.motion.segment_len;
    m["walk_seed"] = t.motion.walk_seed;

    json jt;
    jt["class_id"] = t.class_id;
    jt["appearance_seed"] = t.appearance_seed;
    jt["motion"] = std::move(m);
    jt["visibility"] = t.visibility;
    json boxes = json::array();
    for (const Box& b : t.boxes) boxes.push_back(box_to_json(b));
    jt["boxes"] = std::move(boxes);
    tracks.push_back(std::move(jt));
  }
  doc["tracks"] = std::move(tracks);

  json props = json::array();
  for (const ProposalSet& set : video.proposals) {
    json js;
    js["frame"] = set.frame;
    json boxes = json::array();
    for (const Box& b : set.boxes) boxes.push_back(box_to_json(b));
    js["boxes"] = std::move(boxes);
    props.push_back(std::move(js));
  }
  doc["proposals"] = std::move(props);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("dataset: write failed: " + path.string());
}

SyntheticVideo load_video(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("dataset: cannot open: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("dataset: parse error in " + path.string() + ": " + e.what());
  }
  require_keys(doc,
               {"format", "version", "seed", "width", "height", "frames", "num_classes", "oracle",
                "tracks", "proposals"},
               "dataset");
  if (!doc.contains("format") || doc["format"] != std::string(kDatasetFormat)) {
    throw ConfigError("dataset: unexpected format field in " + path.string());
  }
  if (!doc.contains("version") || doc["version"].get<int>() != kDatasetVersion) {
    throw ConfigError("dataset: unsupported version in " + path.string());
  }

  SyntheticVideo video;
  video.seed = doc.at("seed").get<std::uint64_t>();
  video.width = doc.at("width").get<double>();
  video.height = doc.at("height").get<double>();
  video.frames = doc.at("frames").get<int>();
  video.num_classes = doc.at("num_classes").get<int>();
  if (video.frames < 1 || video.width <= 0 || video.height <= 0 || video.num_classes < 1) {
    throw ConfigError("dataset: invalid geometry in " + path.string());
  }
  {
    const json& o = doc.at("oracle");
    require_keys(o,
                 {"feature_dim", "projection_seed", "noise_std", "receptive_radius",
                  "class_signal_dim", "appearance_dim", "temporal_ambiguity"},
                 "dataset oracle");
    FeatureOracleParams& p = video.oracle;
    p.feature_dim = o.at("feature_dim").get<int>();
    p.projection_seed = o.at("projection_seed").get<std::uint64_t>();
    p.noise_std = o.at("noise_std").get<double>();
    p.receptive_radius = o.at("receptive_radius").get<double>();
    p.class_signal_dim = o.at("class_signal_dim").get<int>();
    p.appearance_dim = o.at("appearance_dim").get<int>();
    p.temporal_ambiguity = o.at("temporal_ambiguity").get<bool>();
  }
  for (const json& jt : doc.at("tracks")) {
    require_keys(jt, {"class_id", "appearance_seed", "motion", "visibility", "boxes"},
                 "dataset track");
    ObjectTrack t;
    t.class_id = jt.at("class_id").get<int>();
    if (t.class_id < 0 || t.class_id >= video.num_classes) {
      throw ConfigError("dataset: track class_id out of range");
    }
    t.appearance_seed = jt.at("appearance_seed").get<std::uint64_t>();
    const json& m = jt.at("motion");
    require_keys(m,
                 {"kind", "vx", "vy", "amp_x", "amp_y", "period", "phase", "scale_rate", "walk_std",
                  "segment_len", "walk_seed"},
                 "dataset motion");
    t.motion.kind = motion_kind_from_name(m.at("kind").get<std::string>());
    t.motion.vx = m.at("vx").get<double>();
    t.motion.vy = m.at("vy").get<double>();
    t.motion.amp_x = m.at("amp_x").get<double>();
    t.motion.amp_y = m.at("amp_y").get<double>();
    t.motion.period = m.at("period").get<double>();
    t.motion.phase = m.at("phase").get<double>();
    t.motion.scale_rate = m.at("scale_rate").get<double>();
    t.motion.walk_std = m.at("walk_std").get<double>();
    t.motion.segment_len = m.at("segment_len").get<int>();
    t.motion.walk_seed = m.at("walk_seed").get<std::uint64_t>();
    t.visibility = jt.at("visibility").get<std::vector<bool>>();
    for (const json& jb : jt.at("boxes")) t.boxes.push_back(box_from_json(jb));
    if (t.boxes.size() != static_cast<std::size_t>(video.frames) ||
        t.visibility.size() != t.boxes.size()) {
      throw ConfigError("dataset: track length mismatch in " + path.string());
    }
    video.tracks.push_back(std::move(t));
  }
  for (const json& js : doc.at("proposals")) {
    require_keys(js, {"frame", "boxes"}, "dataset proposals");
    ProposalSet set;
    set.frame = js.at("frame").get<int>();
    if (set.frame < 0 || set.frame >= video.frames) {
      throw ConfigError("dataset: proposal frame out of range");
    }
    for (const json& jb : js.at("boxes")) set.boxes.push_back(box_from_json(jb));
    video.proposals.push_back(std::move(set));
  }
  return video;
}

}  // namespace tubekit
