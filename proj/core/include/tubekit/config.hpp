#pragma once

#include <filesystem>
#include <vector>

#include "tubekit/synthworld.hpp"

namespace tubekit {

struct DataConfig {
  WorldConfig world;
  ProposalConfig proposals;
  int train_videos{12};
  int eval_videos{8};

  bool operator==(const DataConfig&) const = default;
};

struct TpnSection {
  int frame_stride{2};
  int two_frame_epochs{300};  // budget for the 2-frame reference model
  int epochs{100};            // equal budget for every multi-frame variant
  int batch_size{32};
  double learning_rate{0.03};
  double momentum{0.9};
  double init_std{0.01};
  double grad_clip{0.0};

  bool operator==(const TpnSection&) const = default;
};

struct ClassifierSection {
  int hidden_dim{64};
  int iterations{6000};
  int batch_size{16};
  double learning_rate{0.1};
  double momentum{0.9};
  double lr_decay{0.5};
  int decay_every{2000};
  double init_std{0.01};
  double grad_clip{0.0};

  bool operator==(const ClassifierSection&) const = default;
};

struct EvalSection {
  double iou_threshold{0.5};
  std::vector<int> anchor_frames{0, 8, 16, 24, 32};
  // Frames per classification tubelet in the mode comparison (0 = grow to the
  // video end). Short sequences keep the first-frame fraction high enough for
  // the temporal models' full-context advantage to show in the frame means.
  int classification_length{5};

  bool operator==(const EvalSection&) const = default;
};

// Everything an experiment run depends on besides the seed. Defaults live
// here in code; the JSON form may omit any key (the default fills in) but
// unknown keys are rejected.
struct ExperimentConfig {
  DataConfig data;
  TpnSection tpn;
  ClassifierSection classifier;
  EvalSection eval;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace tubekit
