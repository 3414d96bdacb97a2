#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tubekit/classifier.hpp"
#include "tubekit/config.hpp"
#include "tubekit/eval.hpp"
#include "tubekit/log.hpp"
#include "tubekit/tpn.hpp"

namespace tubekit {

// Train/eval video sets derived deterministically from one seed.
struct Dataset {
  std::vector<SyntheticVideo> train;
  std::vector<SyntheticVideo> eval;
};

Dataset make_dataset(const ExperimentConfig& config, std::uint64_t seed);

// File layout: <dir>/train_000.json ... and <dir>/eval_000.json ....
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Movement-regression corpus over the train split for one window length.
std::vector<TrainingSample> build_split_corpus(const std::vector<SyntheticVideo>& videos,
                                               int window, int frame_stride,
                                               CorpusStats* stats = nullptr);

// Tubelets per video for a split, grown at the configured anchor frames.
// length_cap > 0 limits every tubelet to that many frames; 0 grows each one
// to the end of its video.
std::vector<std::vector<TubeletProposal>> grow_split_tubelets(
    const TpnModel& model, const std::vector<SyntheticVideo>& videos,
    const std::vector<int>& anchor_frames, double min_box_size, int jobs, int length_cap = 0);

// ---------------------------------------------------------------------------
// Window-length comparison (tubelet quality by variant)
// ---------------------------------------------------------------------------

struct WindowComparisonRow {
  std::string variant;  // "w2", "w5_random", "w5_block", "w11_block", "w20_block"
  int window{0};
  bool block_initialized{false};
  double mean_iou{0.0};
  double mad{0.0};
  double mrd{0.0};
  double final_loss{0.0};  // training loss in the model's normalized space
  int matched_tubelets{0};
  int unmatched_tubelets{0};
};

struct WindowComparisonResult {
  std::uint64_t seed{0};
  std::vector<WindowComparisonRow> rows;  // fixed variant order as listed above

  const WindowComparisonRow& row(std::string_view variant) const;
};

// Trains the 2-frame reference, the equal-budget random-init and
// block-init multi-frame variants, grows tubelets on the eval split, and
// scores them against the codec-expressible reference tubelets.
WindowComparisonResult run_window_comparison(const ExperimentConfig& config, std::uint64_t seed,
                                             const Logger& logger = nullptr, int jobs = 1);

// ---------------------------------------------------------------------------
// Classifier-mode comparison (detection metrics by temporal model)
// ---------------------------------------------------------------------------

struct ModeComparisonRow {
  std::string mode;
  double accuracy{0.0};
  double first_frame_accuracy{0.0};
  double mean_ap{0.0};
  double mean_corloc{0.0};
  double final_loss{0.0};
};

struct ModeComparisonResult {
  std::uint64_t seed{0};
  std::vector<ModeComparisonRow> rows;  // per_frame_linear, vanilla_lstm, encoder_decoder

  const ModeComparisonRow& row(std::string_view mode) const;
};

// Builds the tubelet pipeline once (2-frame model, block-init 5-frame
// regressor), then trains and evaluates the three classifier modes on the
// same tubelets.
ModeComparisonResult run_mode_comparison(const ExperimentConfig& config, std::uint64_t seed,
                                         const Logger& logger = nullptr, int jobs = 1);

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

// Writes <prefix>_metrics.json and <prefix>_metrics.txt into `dir`. Identical
// results produce byte-identical files.
void write_window_comparison_files(const std::filesystem::path& dir,
                                   const std::vector<WindowComparisonResult>& results,
                                   const std::string& prefix = "window_comparison");
void write_mode_comparison_files(const std::filesystem::path& dir,
                                 const std::vector<ModeComparisonResult>& results,
                                 const std::string& prefix = "mode_comparison");

}  // namespace tubekit
