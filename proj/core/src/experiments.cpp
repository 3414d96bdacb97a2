#include "tubekit/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tubekit/errors.hpp"
#include "tubekit/rng.hpp"

namespace tubekit {

namespace {

using json = nlohmann::ordered_json;

std::string split_filename(const char* split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.json", split, index);
  return buf;
}

}  // namespace

Dataset make_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.data.train_videos < 1 || config.data.eval_videos < 1) {
    throw ConfigError("dataset: need at least one train and one eval video");
  }
  Dataset dataset;
  dataset.train.reserve(static_cast<std::size_t>(config.data.train_videos));
  for (int i = 0; i < config.data.train_videos; ++i) {
    SyntheticVideo video = generate_video(
        config.data.world, mix_seed(seed, stream_tag("train-video"), static_cast<std::uint64_t>(i)));
    attach_proposals(video, config.data.proposals);
    dataset.train.push_back(std::move(video));
  }
  dataset.eval.reserve(static_cast<std::size_t>(config.data.eval_videos));
  for (int i = 0; i < config.data.eval_videos; ++i) {
    SyntheticVideo video = generate_video(
        config.data.world, mix_seed(seed, stream_tag("eval-video"), static_cast<std::uint64_t>(i)));
    attach_proposals(video, config.data.proposals);
    dataset.eval.push_back(std::move(video));
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < dataset.train.size(); ++i) {
    save_video(dataset.train[i], dir / split_filename("train", i));
  }
  for (std::size_t i = 0; i < dataset.eval.size(); ++i) {
    save_video(dataset.eval[i], dir / split_filename("eval", i));
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset dataset;
  for (const char* split : {"train", "eval"}) {
    std::vector<SyntheticVideo>& out = split == std::string_view("train") ? dataset.train
                                                                          : dataset.eval;
    for (std::size_t i = 0;; ++i) {
      const std::filesystem::path path = dir / split_filename(split, i);
      if (!std::filesystem::exists(path)) break;
      out.push_back(load_video(path));
    }
  }
  if (dataset.train.empty() && dataset.eval.empty()) {
    throw MissingInputError("dataset: no video files under " + dir.string());
  }
  return dataset;
}

std::vector<TrainingSample> build_split_corpus(const std::vector<SyntheticVideo>& videos,
                                               int window, int frame_stride, CorpusStats* stats) {
  std::vector<TrainingSample> corpus;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const FeatureOracle oracle(videos[v]);
    std::vector<TrainingSample> part = build_training_corpus(videos[v], oracle, window,
                                                             frame_stride, static_cast<int>(v),
                                                             stats);
    corpus.insert(corpus.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  return corpus;
}

std::vector<std::vector<TubeletProposal>> grow_split_tubelets(
    const TpnModel& model, const std::vector<SyntheticVideo>& videos,
    const std::vector<int>& anchor_frames, double min_box_size, int jobs, int length_cap) {
  std::vector<std::vector<TubeletProposal>> out;
  out.reserve(videos.size());
  for (const SyntheticVideo& video : videos) {
    const FeatureOracle oracle(video);
    if (length_cap <= 0) {
      out.push_back(generate_all(model, oracle, anchor_frames, min_box_size, jobs));
      continue;
    }
    std::vector<TubeletProposal> per_video;
    for (const int frame : anchor_frames) {
      if (frame < 0 || frame >= video.frames) continue;
      const ProposalSet* set = video.proposals_at(frame);
      if (set == nullptr) continue;
      const int length = std::min(length_cap, video.frames - frame);
      std::vector<TubeletProposal> batch =
          generate_batch(model, oracle, set->boxes, frame, length, min_box_size);
      per_video.insert(per_video.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
    }
    out.push_back(std::move(per_video));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Window-length comparison
// ---------------------------------------------------------------------------

const WindowComparisonRow& WindowComparisonResult::row(std::string_view variant) const {
  for (const WindowComparisonRow& r : rows) {
    if (r.variant == variant) return r;
  }
  throw std::invalid_argument("window comparison: unknown variant " + std::string(variant));
}

namespace {

WindowComparisonRow evaluate_variant(const std::string& variant, const TpnModel& model,
                                     bool block_initialized, double final_loss,
                                     const ExperimentConfig& config, const Dataset& dataset,
                                     int jobs) {
  WindowComparisonRow row;
  row.variant = variant;
  row.window = model.window;
  row.block_initialized = block_initialized;
  row.final_loss = final_loss;

  std::vector<const SyntheticVideo*> videos;
  for (const SyntheticVideo& v : dataset.eval) videos.push_back(&v);
  const std::vector<std::vector<TubeletProposal>> tubelets = grow_split_tubelets(
      model, dataset.eval, config.eval.anchor_frames, config.data.world.min_box_size, jobs);
  const QualityEval quality = evaluate_tubelet_quality(videos, tubelets);
  row.mean_iou = quality.mean.mean_iou;
  row.mad = quality.mean.mad;
  row.mrd = quality.mean.mrd;
  row.matched_tubelets = quality.matched_tubelets;
  row.unmatched_tubelets = quality.unmatched_tubelets;
  return row;
}

TpnTrainConfig tpn_train_config(const ExperimentConfig& config, int window, int epochs,
                                std::uint64_t seed) {
  TpnTrainConfig out;
  out.window = window;
  out.epochs = epochs;
  out.batch_size = config.tpn.batch_size;
  out.learning_rate = config.tpn.learning_rate;
  out.momentum = config.tpn.momentum;
  out.init_std = config.tpn.init_std;
  out.grad_clip = config.tpn.grad_clip;
  out.seed = seed;
  return out;
}

}  // namespace

WindowComparisonResult run_window_comparison(const ExperimentConfig& config, std::uint64_t seed,
                                             const Logger& logger, int jobs) {
  WindowComparisonResult result;
  result.seed = seed;

  const Dataset dataset = make_dataset(config, seed);
  LogLine("window-comparison")
      .kv("seed", seed)
      .kv("train_videos", dataset.train.size())
      .kv("eval_videos", dataset.eval.size())
      .emit(logger);

  // 2-frame reference model; also the block-init source.
  const std::vector<TrainingSample> corpus2 =
      build_split_corpus(dataset.train, 2, config.tpn.frame_stride);
  const TpnTrainResult two_frame =
      train_tpn(corpus2, tpn_train_config(config, 2, config.tpn.two_frame_epochs,
                                          mix_seed(seed, stream_tag("tpn-w2"))),
                nullptr, logger);
  result.rows.push_back(evaluate_variant("w2", two_frame.model, false,
                                         two_frame.epoch_losses.empty()
                                             ? corpus_loss(two_frame.model, corpus2)
                                             : two_frame.epoch_losses.back(),
                                         config, dataset, jobs));

  // Equal-budget 5-frame variants: random init vs block init from the
  // 2-frame model.
  {
    const std::vector<TrainingSample> corpus5 =
        build_split_corpus(dataset.train, 5, config.tpn.frame_stride);
    const TpnTrainResult random5 =
        train_tpn(corpus5, tpn_train_config(config, 5, config.tpn.epochs,
                                            mix_seed(seed, stream_tag("tpn-random"), 5)),
                  nullptr, logger);
    result.rows.push_back(evaluate_variant("w5_random", random5.model, false,
                                           random5.epoch_losses.empty()
                                               ? corpus_loss(random5.model, corpus5)
                                               : random5.epoch_losses.back(),
                                           config, dataset, jobs));

    const TpnModel block5 = block_init(two_frame.model, 5);
    const TpnTrainResult tuned5 =
        train_tpn(corpus5, tpn_train_config(config, 5, config.tpn.epochs,
                                            mix_seed(seed, stream_tag("tpn-block"), 5)),
                  &block5, logger);
    result.rows.push_back(evaluate_variant("w5_block", tuned5.model, true,
                                           tuned5.epoch_losses.empty()
                                               ? corpus_loss(tuned5.model, corpus5)
                                               : tuned5.epoch_losses.back(),
                                           config, dataset, jobs));
  }

  for (const int window : {11, 20}) {
    const std::vector<TrainingSample> corpus =
        build_split_corpus(dataset.train, window, config.tpn.frame_stride);
    const TpnModel block = block_init(two_frame.model, window);
    const TpnTrainResult tuned =
        train_tpn(corpus, tpn_train_config(config, window, config.tpn.epochs,
                                           mix_seed(seed, stream_tag("tpn-block"),
                                                    static_cast<std::uint64_t>(window))),
                  &block, logger);
    result.rows.push_back(evaluate_variant("w" + std::to_string(window) + "_block", tuned.model,
                                           true,
                                           tuned.epoch_losses.empty()
                                               ? corpus_loss(tuned.model, corpus)
                                               : tuned.epoch_losses.back(),
                                           config, dataset, jobs));
  }

  for (const WindowComparisonRow& row : result.rows) {
    LogLine("window-comparison")
        .kv("seed", seed)
        .kv("variant", row.variant)
        .kv("mean_iou", row.mean_iou)
        .kv("mad", row.mad)
        .kv("mrd", row.mrd)
        .emit(logger);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Classifier-mode comparison
// ---------------------------------------------------------------------------

const ModeComparisonRow& ModeComparisonResult::row(std::string_view mode) const {
  for (const ModeComparisonRow& r : rows) {
    if (r.mode == mode) return r;
  }
  throw std::invalid_argument("mode comparison: unknown mode " + std::string(mode));
}

ModeComparisonResult run_mode_comparison(const ExperimentConfig& config, std::uint64_t seed,
                                         const Logger& logger, int jobs) {
  ModeComparisonResult result;
  result.seed = seed;

  const Dataset dataset = make_dataset(config, seed);
  LogLine("mode-comparison")
      .kv("seed", seed)
      .kv("train_videos", dataset.train.size())
      .kv("eval_videos", dataset.eval.size())
      .emit(logger);

  // Reference tubelet pipeline: 2-frame model expanded to 5 frames by block
  // init, then fine-tuned.
  const std::vector<TrainingSample> corpus2 =
      build_split_corpus(dataset.train, 2, config.tpn.frame_stride);
  const TpnTrainResult two_frame =
      train_tpn(corpus2, tpn_train_config(config, 2, config.tpn.two_frame_epochs,
                                          mix_seed(seed, stream_tag("tpn-w2"))),
                nullptr, logger);
  const std::vector<TrainingSample> corpus5 =
      build_split_corpus(dataset.train, 5, config.tpn.frame_stride);
  const TpnModel block5 = block_init(two_frame.model, 5);
  const TpnTrainResult tuned5 =
      train_tpn(corpus5, tpn_train_config(config, 5, config.tpn.epochs,
                                          mix_seed(seed, stream_tag("tpn-block"), 5)),
                &block5, logger);
  const TpnModel& tpn = tuned5.model;

  // With a length cap the tubelets tile each video in cap-sized windows; the
  // anchors then hit every wave alignment instead of a single residue class.
  std::vector<int> cls_anchors = config.eval.anchor_frames;
  if (config.eval.classification_length > 0) {
    int max_frames = 0;
    for (const SyntheticVideo& v : dataset.train) max_frames = std::max(max_frames, v.frames);
    for (const SyntheticVideo& v : dataset.eval) max_frames = std::max(max_frames, v.frames);
    cls_anchors.clear();
    for (int frame = 0; frame < max_frames; frame += config.eval.classification_length)
      cls_anchors.push_back(frame);
  }
  std::vector<std::vector<TubeletProposal>> train_tubelets = grow_split_tubelets(
      tpn, dataset.train, cls_anchors, config.data.world.min_box_size, jobs,
      config.eval.classification_length);
  std::vector<std::vector<TubeletProposal>> eval_tubelets = grow_split_tubelets(
      tpn, dataset.eval, cls_anchors, config.data.world.min_box_size, jobs,
      config.eval.classification_length);

  std::vector<SequenceSample> train_sequences;
  for (std::size_t v = 0; v < dataset.train.size(); ++v) {
    const FeatureOracle oracle(dataset.train[v]);
    std::vector<SequenceSample> part = build_sequence_samples(train_tubelets[v], oracle);
    train_sequences.insert(train_sequences.end(), std::make_move_iterator(part.begin()),
                           std::make_move_iterator(part.end()));
  }
  std::vector<SequenceSample> eval_sequences;
  for (std::size_t v = 0; v < dataset.eval.size(); ++v) {
    const FeatureOracle oracle(dataset.eval[v]);
    std::vector<SequenceSample> part = build_sequence_samples(eval_tubelets[v], oracle);
    eval_sequences.insert(eval_sequences.end(), std::make_move_iterator(part.begin()),
                          std::make_move_iterator(part.end()));
  }

  std::vector<const SyntheticVideo*> eval_videos;
  for (const SyntheticVideo& v : dataset.eval) eval_videos.push_back(&v);

  for (const ClassifierMode mode : {ClassifierMode::per_frame_linear, ClassifierMode::vanilla_lstm,
                                    ClassifierMode::encoder_decoder}) {
    ClassifierTrainConfig train_config;
    train_config.mode = mode;
    train_config.hidden_dim = config.classifier.hidden_dim;
    train_config.num_classes = config.data.world.num_classes;
    train_config.iterations = config.classifier.iterations;
    train_config.batch_size = config.classifier.batch_size;
    train_config.learning_rate = config.classifier.learning_rate;
    train_config.momentum = config.classifier.momentum;
    train_config.lr_decay = config.classifier.lr_decay;
    train_config.decay_every = config.classifier.decay_every;
    train_config.init_std = config.classifier.init_std;
    train_config.grad_clip = config.classifier.grad_clip;
    train_config.seed = mix_seed(seed, stream_tag("cls"), stream_tag(classifier_mode_name(mode)));

    const ClassifierTrainResult trained = train_classifier(train_sequences, train_config, logger);

    ModeComparisonRow row;
    row.mode = classifier_mode_name(mode);
    row.final_loss = trained.iteration_losses.empty()
                         ? classifier_loss(trained.model, train_sequences)
                         : trained.iteration_losses.back();

    const SequenceAccuracy acc = sequence_accuracy(trained.model, eval_sequences);
    row.accuracy = acc.overall;
    row.first_frame_accuracy = acc.first_frame;

    std::vector<std::vector<TubeletProposal>> scored = eval_tubelets;
    for (std::size_t v = 0; v < dataset.eval.size(); ++v) {
      const FeatureOracle oracle(dataset.eval[v]);
      apply_scores(scored[v], trained.model, oracle);
    }
    const DetectionEval det = evaluate_detections(eval_videos, scored,
                                                  config.data.world.num_classes,
                                                  config.eval.iou_threshold);
    row.mean_ap = det.mean_ap;
    row.mean_corloc = det.mean_corloc;

    LogLine("mode-comparison")
        .kv("seed", seed)
        .kv("mode", row.mode)
        .kv("accuracy", row.accuracy)
        .kv("first_frame_accuracy", row.first_frame_accuracy)
        .kv("mean_ap", row.mean_ap)
        .kv("mean_corloc", row.mean_corloc)
        .emit(logger);
    result.rows.push_back(std::move(row));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("report: write failed: " + path.string());
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_window_comparison_files(const std::filesystem::path& dir,
                                   const std::vector<WindowComparisonResult>& results,
                                   const std::string& prefix) {
  std::filesystem::create_directories(dir);

  json doc;
  doc["report"] = "window_comparison";
  json seeds = json::array();
  for (const WindowComparisonResult& result : results) {
    json rows = json::array();
    for (const WindowComparisonRow& row : result.rows) {
      json r;
      r["variant"] = row.variant;
      r["window"] = row.window;
      r["block_initialized"] = row.block_initialized;
      r["mean_iou"] = row.mean_iou;
      r["mad"] = row.mad;
      r["mrd"] = row.mrd;
      r["final_loss"] = row.final_loss;
      r["matched_tubelets"] = row.matched_tubelets;
      r["unmatched_tubelets"] = row.unmatched_tubelets;
      rows.push_back(std::move(r));
    }
    json s;
    s["seed"] = result.seed;
    s["rows"] = std::move(rows);
    seeds.push_back(std::move(s));
  }
  doc["seeds"] = std::move(seeds);
  write_text_file(dir / (prefix + "_metrics.json"), doc.dump(1) + "\n");

  std::string text = "variant window block mean_iou mad mrd final_loss seed\n";
  for (const WindowComparisonResult& result : results) {
    for (const WindowComparisonRow& row : result.rows) {
      text += row.variant + " " + std::to_string(row.window) + " " +
              (row.block_initialized ? "1" : "0") + " " + fixed6(row.mean_iou) + " " +
              fixed6(row.mad) + " " + fixed6(row.mrd) + " " + fixed6(row.final_loss) + " " +
              std::to_string(result.seed) + "\n";
    }
  }
  write_text_file(dir / (prefix + "_metrics.txt"), text);
}

void write_mode_comparison_files(const std::filesystem::path& dir,
                                 const std::vector<ModeComparisonResult>& results,
                                 const std::string& prefix) {
  std::filesystem::create_directories(dir);

  json doc;
  doc["report"] = "mode_comparison";
  json seeds = json::array();
  for (const ModeComparisonResult& result : results) {
    json rows = json::array();
    for (const ModeComparisonRow& row : result.rows) {
      json r;
      r["mode"] = row.mode;
      r["accuracy"] = row.accuracy;
      r["first_frame_accuracy"] = row.first_frame_accuracy;
      r["mean_ap"] = row.mean_ap;
      r["mean_corloc"] = row.mean_corloc;
      r["final_loss"] = row.final_loss;
      rows.push_back(std::move(r));
    }
    json s;
    s["seed"] = result.seed;
    s["rows"] = std::move(rows);
    seeds.push_back(std::move(s));
  }
  doc["seeds"] = std::move(seeds);
  write_text_file(dir / (prefix + "_metrics.json"), doc.dump(1) + "\n");

  std::string text = "mode accuracy first_frame_accuracy mean_ap mean_corloc final_loss seed\n";
  for (const ModeComparisonResult& result : results) {
    for (const ModeComparisonRow& row : result.rows) {
      text += row.mode + " " + fixed6(row.accuracy) + " " + fixed6(row.first_frame_accuracy) +
              " " + fixed6(row.mean_ap) + " " + fixed6(row.mean_corloc) + " " +
              fixed6(row.final_loss) + " " + std::to_string(result.seed) + "\n";
    }
  }
  write_text_file(dir / (prefix + "_metrics.txt"), text);
}

}  // namespace tubekit
