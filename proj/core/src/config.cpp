#include "tubekit/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tubekit/errors.hpp"

namespace tubekit {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kConfigFormat = "tubekit.config";
constexpr int kConfigVersion = 1;

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  const char* where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
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

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;  // defaults stay in force
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

void read_oracle(const json& obj, FeatureOracleParams& p) {
  require_keys(obj,
               {"feature_dim", "projection_seed", "noise_std", "receptive_radius",
                "class_signal_dim", "appearance_dim", "temporal_ambiguity"},
               "config oracle");
  read(obj, "feature_dim", p.feature_dim);
  read(obj, "projection_seed", p.projection_seed);
  read(obj, "noise_std", p.noise_std);
  read(obj, "receptive_radius", p.receptive_radius);
  read(obj, "class_signal_dim", p.class_signal_dim);
  read(obj, "appearance_dim", p.appearance_dim);
  read(obj, "temporal_ambiguity", p.temporal_ambiguity);
}

void read_world(const json& obj, WorldConfig& w) {
  require_keys(obj,
               {"width", "height", "frames", "num_classes", "tracks_per_video",
                "min_object_size", "max_object_size", "speed_min", "speed_max", "min_box_size",
                "occlusion_fraction", "motion_kinds", "oracle"},
               "config world");
  read(obj, "width", w.width);
  read(obj, "height", w.height);
  read(obj, "frames", w.frames);
  read(obj, "num_classes", w.num_classes);
  read(obj, "tracks_per_video", w.tracks_per_video);
  read(obj, "min_object_size", w.min_object_size);
  read(obj, "max_object_size", w.max_object_size);
  read(obj, "speed_min", w.speed_min);
  read(obj, "speed_max", w.speed_max);
  read(obj, "min_box_size", w.min_box_size);
  read(obj, "occlusion_fraction", w.occlusion_fraction);
  if (obj.contains("motion_kinds")) {
    w.motion_kinds.clear();
    for (const json& jk : obj.at("motion_kinds")) {
      w.motion_kinds.push_back(motion_kind_from_name(jk.get<std::string>()));
    }
  }
  if (obj.contains("oracle")) read_oracle(obj.at("oracle"), w.oracle);
}

json oracle_to_json(const FeatureOracleParams& p) {
  json o;
  o["feature_dim"] = p.feature_dim;
  o["projection_seed"] = p.projection_seed;
  o["noise_std"] = p.noise_std;
  o["receptive_radius"] = p.receptive_radius;
  o["class_signal_dim"] = p.class_signal_dim;
  o["appearance_dim"] = p.appearance_dim;
  o["temporal_ambiguity"] = p.temporal_ambiguity;
  return o;
}

json world_to_json(const WorldConfig& w) {
  json o;
  o["width"] = w.width;
  o["height"] = w.height;
  o["frames"] = w.frames;
  o["num_classes"] = w.num_classes;
  o["tracks_per_video"] = w.tracks_per_video;
  o["min_object_size"] = w.min_object_size;
  o["max_object_size"] = w.max_object_size;
  o["speed_min"] = w.speed_min;
  o["speed_max"] = w.speed_max;
  o["min_box_size"] = w.min_box_size;
  o["occlusion_fraction"] = w.occlusion_fraction;
  json kinds = json::array();
  for (MotionKind k : w.motion_kinds) kinds.push_back(motion_kind_name(k));
  o["motion_kinds"] = std::move(kinds);
  o["oracle"] = oracle_to_json(w.oracle);
  return o;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("config: cannot open: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
  }
  require_keys(doc, {"format", "version", "data", "tpn", "classifier", "eval"}, "config");
  if (doc.contains("format") && doc["format"] != std::string(kConfigFormat)) {
    throw ConfigError("config: unexpected format field in " + path.string());
  }
  if (doc.contains("version") && doc["version"].get<int>() != kConfigVersion) {
    throw ConfigError("config: unsupported version in " + path.string());
  }

  ExperimentConfig config;
  if (doc.contains("data")) {
    const json& d = doc.at("data");
    require_keys(d, {"world", "proposals", "train_videos", "eval_videos"}, "config data");
    if (d.contains("world")) read_world(d.at("world"), config.data.world);
    if (d.contains("proposals")) {
      const json& p = d.at("proposals");
      require_keys(p, {"per_object", "background", "center_jitter", "size_jitter"},
                   "config proposals");
      read(p, "per_object", config.data.proposals.per_object);
      read(p, "background", config.data.proposals.background);
      read(p, "center_jitter", config.data.proposals.center_jitter);
      read(p, "size_jitter", config.data.proposals.size_jitter);
    }
    read(d, "train_videos", config.data.train_videos);
    read(d, "eval_videos", config.data.eval_videos);
  }
  if (doc.contains("tpn")) {
    const json& t = doc.at("tpn");
    require_keys(t,
                 {"frame_stride", "two_frame_epochs", "epochs", "batch_size", "learning_rate",
                  "momentum", "init_std", "grad_clip"},
                 "config tpn");
    read(t, "frame_stride", config.tpn.frame_stride);
    read(t, "two_frame_epochs", config.tpn.two_frame_epochs);
    read(t, "epochs", config.tpn.epochs);
    read(t, "batch_size", config.tpn.batch_size);
    read(t, "learning_rate", config.tpn.learning_rate);
    read(t, "momentum", config.tpn.momentum);
    read(t, "init_std", config.tpn.init_std);
    read(t, "grad_clip", config.tpn.grad_clip);
  }
  if (doc.contains("classifier")) {
    const json& c = doc.at("classifier");
    require_keys(c,
                 {"hidden_dim", "iterations", "batch_size", "learning_rate", "momentum",
                  "lr_decay", "decay_every", "init_std", "grad_clip"},
                 "config classifier");
    read(c, "hidden_dim", config.classifier.hidden_dim);
    read(c, "iterations", config.classifier.iterations);
    read(c, "batch_size", config.classifier.batch_size);
    read(c, "learning_rate", config.classifier.learning_rate);
    read(c, "momentum", config.classifier.momentum);
    read(c, "lr_decay", config.classifier.lr_decay);
    read(c, "decay_every", config.classifier.decay_every);
    read(c, "init_std", config.classifier.init_std);
    read(c, "grad_clip", config.classifier.grad_clip);
  }
  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    require_keys(e, {"iou_threshold", "anchor_frames", "classification_length"}, "config eval");
    read(e, "iou_threshold", config.eval.iou_threshold);
    read(e, "anchor_frames", config.eval.anchor_frames);
    read(e, "classification_length", config.eval.classification_length);
  }
  return config;
}

void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  json doc;
  doc["format"] = std::string(kConfigFormat);
  doc["version"] = kConfigVersion;
  {
    json d;
    d["world"] = world_to_json(config.data.world);
    json p;
    p["per_object"] = config.data.proposals.per_object;
    p["background"] = config.data.proposals.background;
    p["center_jitter"] = config.data.proposals.center_jitter;
    p["size_jitter"] = config.data.proposals.size_jitter;
    d["proposals"] = std::move(p);
    d["train_videos"] = config.data.train_videos;
    d["eval_videos"] = config.data.eval_videos;
    doc["data"] = std::move(d);
  }
  {
    json t;
    t["frame_stride"] = config.tpn.frame_stride;
    t["two_frame_epochs"] = config.tpn.two_frame_epochs;
    t["epochs"] = config.tpn.epochs;
    t["batch_size"] = config.tpn.batch_size;
    t["learning_rate"] = config.tpn.learning_rate;
    t["momentum"] = config.tpn.momentum;
    t["init_std"] = config.tpn.init_std;
    t["grad_clip"] = config.tpn.grad_clip;
    doc["tpn"] = std::move(t);
  }
  {
    json c;
    c["hidden_dim"] = config.classifier.hidden_dim;
    c["iterations"] = config.classifier.iterations;
    c["batch_size"] = config.classifier.batch_size;
    c["learning_rate"] = config.classifier.learning_rate;
    c["momentum"] = config.classifier.momentum;
    c["lr_decay"] = config.classifier.lr_decay;
    c["decay_every"] = config.classifier.decay_every;
    c["init_std"] = config.classifier.init_std;
    c["grad_clip"] = config.classifier.grad_clip;
    doc["classifier"] = std::move(c);
  }
  {
    json e;
    e["iou_threshold"] = config.eval.iou_threshold;
    e["anchor_frames"] = config.eval.anchor_frames;
    e["classification_length"] = config.eval.classification_length;
    doc["eval"] = std::move(e);
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot open for writing: " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("config: write failed: " + path.string());
}

}  // namespace tubekit
