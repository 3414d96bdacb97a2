// Command-line front end for the tubelet pipeline: dataset generation,
// movement-regressor and classifier training, tubelet growth, evaluation,
// gradient checking, and end-to-end reproduction runs.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tubekit/classifier.hpp"
#include "tubekit/config.hpp"
#include "tubekit/errors.hpp"
#include "tubekit/eval.hpp"
#include "tubekit/experiments.hpp"
#include "tubekit/log.hpp"
#include "tubekit/rng.hpp"
#include "tubekit/tpn.hpp"
#include "tubekit/tubelet.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tubekit;

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitAssertion = 4;

Logger stdout_logger() {
  return [](const std::string& line) { std::cout << line << '\n'; };
}

ExperimentConfig config_from_flag(const std::string& config_path) {
  if (config_path.empty()) return ExperimentConfig{};
  return load_experiment_config(config_path);
}

std::string tubelet_filename(const char* split, std::size_t index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "tubelets_%s_%03zu.txt", split, index);
  return buf;
}

std::vector<SyntheticVideo>& split_of(Dataset& dataset, const std::string& split) {
  if (split == "train") return dataset.train;
  if (split == "eval") return dataset.eval;
  throw ConfigError("unknown split: " + split + " (expected train or eval)");
}

// Per-video tubelet files for one split; throws when none exist.
std::vector<std::vector<TubeletProposal>> load_split_tubelets(const fs::path& dir,
                                                              const std::string& split,
                                                              std::size_t num_videos) {
  std::vector<std::vector<TubeletProposal>> out;
  for (std::size_t i = 0; i < num_videos; ++i) {
    const fs::path path = dir / tubelet_filename(split.c_str(), i);
    if (!fs::exists(path)) {
      throw MissingInputError("tubelets: missing file: " + path.string());
    }
    out.push_back(load_tubelets(path));
  }
  return out;
}

int run_gen_data(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
  const ExperimentConfig config = config_from_flag(config_path);
  const Logger log = stdout_logger();
  const Dataset dataset = make_dataset(config, seed);
  fs::create_directories(out_dir);
  save_dataset(dataset, out_dir);
  save_experiment_config(config, fs::path(out_dir) / "config.json");
  LogLine("gen-data")
      .kv("seed", seed)
      .kv("train_videos", dataset.train.size())
      .kv("eval_videos", dataset.eval.size())
      .kv("out", out_dir)
      .emit(log);
  return 0;
}

int run_train_tpn(const std::string& config_path, std::uint64_t seed, const std::string& data_dir,
                  int window, int epochs_override, const std::string& init_path,
                  const std::string& block_from, const std::string& out_path) {
  const ExperimentConfig config = config_from_flag(config_path);
  const Logger log = stdout_logger();
  Dataset dataset = load_dataset(data_dir);
  if (dataset.train.empty()) throw MissingInputError("train-tpn: no train videos in " + data_dir);

  const std::vector<TrainingSample> corpus =
      build_split_corpus(dataset.train, window, config.tpn.frame_stride);
  LogLine("train-tpn").kv("window", window).kv("samples", corpus.size()).emit(log);

  TpnTrainConfig train_config;
  train_config.window = window;
  train_config.epochs = epochs_override >= 0
                            ? epochs_override
                            : (window == 2 ? config.tpn.two_frame_epochs : config.tpn.epochs);
  train_config.batch_size = config.tpn.batch_size;
  train_config.learning_rate = config.tpn.learning_rate;
  train_config.momentum = config.tpn.momentum;
  train_config.init_std = config.tpn.init_std;
  train_config.grad_clip = config.tpn.grad_clip;
  train_config.seed = mix_seed(seed, stream_tag("cli-train-tpn"),
                               static_cast<std::uint64_t>(window));

  TpnModel init_model;
  const TpnModel* init = nullptr;
  if (!block_from.empty() && !init_path.empty()) {
    throw ConfigError("train-tpn: --init and --block-from are mutually exclusive");
  }
  if (!block_from.empty()) {
    init_model = block_init(load_tpn_model(block_from), window);
    init = &init_model;
  } else if (!init_path.empty()) {
    init_model = load_tpn_model(init_path);
    init = &init_model;
  }

  const TpnTrainResult result = train_tpn(corpus, train_config, init, log);
  save_tpn_model(result.model, out_path);
  LogLine("train-tpn")
      .kv("out", out_path)
      .kv("final_loss", result.epoch_losses.empty() ? corpus_loss(result.model, corpus)
                                                    : result.epoch_losses.back())
      .emit(log);
  return 0;
}

int run_gen_tubelets(const std::string& config_path, const std::string& data_dir,
                     const std::string& model_path, const std::string& split, bool ideal,
                     int jobs, const std::string& out_dir) {
  const ExperimentConfig config = config_from_flag(config_path);
  const Logger log = stdout_logger();
  Dataset dataset = load_dataset(data_dir);
  std::vector<SyntheticVideo>& videos = split_of(dataset, split);
  if (videos.empty()) {
    throw MissingInputError("gen-tubelets: no " + split + " videos in " + data_dir);
  }
  fs::create_directories(out_dir);

  std::size_t total = 0;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    std::vector<TubeletProposal> tubelets;
    if (ideal) {
      // Codec-expressible reference tubelets for matched proposals.
      for (const int anchor_frame : config.eval.anchor_frames) {
        const ProposalSet* proposals = videos[v].proposals_at(anchor_frame);
        if (proposals == nullptr) {
          throw MissingInputError("gen-tubelets: no proposals at frame " +
                                  std::to_string(anchor_frame));
        }
        for (const Box& anchor : proposals->boxes) {
          const int track = match_track(videos[v], anchor, anchor_frame);
          if (track < 0) continue;
          tubelets.push_back(ideal_tubelet(anchor,
                                           videos[v].tracks[static_cast<std::size_t>(track)],
                                           anchor_frame, videos[v].frames - anchor_frame));
        }
      }
    } else {
      if (model_path.empty()) throw ConfigError("gen-tubelets: --model is required without --ideal");
      const TpnModel model = load_tpn_model(model_path);
      const FeatureOracle oracle(videos[v]);
      tubelets = generate_all(model, oracle, config.eval.anchor_frames,
                              config.data.world.min_box_size, jobs);
    }
    save_tubelets(tubelets, fs::path(out_dir) / tubelet_filename(split.c_str(), v));
    total += tubelets.size();
  }
  LogLine("gen-tubelets")
      .kv("split", split)
      .kv("videos", videos.size())
      .kv("tubelets", total)
      .kv("ideal", ideal ? 1 : 0)
      .kv("out", out_dir)
      .emit(log);
  return 0;
}

int run_train_lstm(const std::string& config_path, std::uint64_t seed, const std::string& data_dir,
                   const std::string& tubelets_dir, const std::string& mode_name,
                   const std::string& out_path) {
  const ExperimentConfig config = config_from_flag(config_path);
  const Logger log = stdout_logger();
  Dataset dataset = load_dataset(data_dir);
  if (dataset.train.empty()) throw MissingInputError("train-lstm: no train videos in " + data_dir);
  const std::vector<std::vector<TubeletProposal>> tubelets =
      load_split_tubelets(tubelets_dir, "train", dataset.train.size());

  std::vector<SequenceSample> sequences;
  for (std::size_t v = 0; v < dataset.train.size(); ++v) {
    const FeatureOracle oracle(dataset.train[v]);
    std::vector<SequenceSample> part = build_sequence_samples(tubelets[v], oracle);
    sequences.insert(sequences.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
  }
  LogLine("train-lstm").kv("mode", mode_name).kv("sequences", sequences.size()).emit(log);

  ClassifierTrainConfig train_config;
  train_config.mode = classifier_mode_from_name(mode_name);
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
  train_config.seed = mix_seed(seed, stream_tag("cli-train-lstm"), stream_tag(mode_name.c_str()));

  const ClassifierTrainResult result = train_classifier(sequences, train_config, log);
  save_classifier(result.model, out_path);
  LogLine("train-lstm")
      .kv("out", out_path)
      .kv("final_loss", result.iteration_losses.empty()
                            ? classifier_loss(result.model, sequences)
                            : result.iteration_losses.back())
      .emit(log);
  return 0;
}

int run_evaluate(const std::string& config_path, const std::string& data_dir,
                 const std::string& tubelets_dir, const std::string& classifier_path,
                 const std::string& out_path) {
  const ExperimentConfig config = config_from_flag(config_path);
  const Logger log = stdout_logger();
  Dataset dataset = load_dataset(data_dir);
  if (dataset.eval.empty()) throw MissingInputError("evaluate: no eval videos in " + data_dir);
  std::vector<std::vector<TubeletProposal>> tubelets =
      load_split_tubelets(tubelets_dir, "eval", dataset.eval.size());

  std::vector<const SyntheticVideo*> videos;
  for (const SyntheticVideo& v : dataset.eval) videos.push_back(&v);

  const QualityEval quality = evaluate_tubelet_quality(videos, tubelets);
  LogLine("evaluate")
      .kv("matched", quality.matched_tubelets)
      .kv("unmatched", quality.unmatched_tubelets)
      .kv("mean_iou", quality.mean.mean_iou)
      .kv("mad", quality.mean.mad)
      .kv("mrd", quality.mean.mrd)
      .emit(log);

  bool have_scores = !classifier_path.empty();
  if (!classifier_path.empty()) {
    const TemporalClassifier model = load_classifier(classifier_path);
    for (std::size_t v = 0; v < dataset.eval.size(); ++v) {
      const FeatureOracle oracle(dataset.eval[v]);
      apply_scores(tubelets[v], model, oracle);
    }
  } else {
    have_scores = true;
    for (const std::vector<TubeletProposal>& per_video : tubelets) {
      for (const TubeletProposal& tp : per_video) {
        if (tp.scores.size() != tp.boxes.size()) {
          have_scores = false;
          break;
        }
      }
    }
  }

  std::string json_text = "{\n \"mean_iou\": " + std::to_string(quality.mean.mean_iou) +
                          ",\n \"mad\": " + std::to_string(quality.mean.mad) +
                          ",\n \"mrd\": " + std::to_string(quality.mean.mrd) +
                          ",\n \"matched_tubelets\": " + std::to_string(quality.matched_tubelets) +
                          ",\n \"unmatched_tubelets\": " +
                          std::to_string(quality.unmatched_tubelets);
  if (have_scores) {
    const DetectionEval det = evaluate_detections(videos, tubelets,
                                                  config.data.world.num_classes,
                                                  config.eval.iou_threshold);
    LogLine("evaluate").kv("mean_ap", det.mean_ap).kv("mean_corloc", det.mean_corloc).emit(log);
    json_text += ",\n \"mean_ap\": " + std::to_string(det.mean_ap) +
                 ",\n \"mean_corloc\": " + std::to_string(det.mean_corloc);
  }
  json_text += "\n}\n";

  if (!out_path.empty()) {
    std::FILE* f = std::fopen(out_path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("evaluate: cannot open " + out_path);
    std::fputs(json_text.c_str(), f);
    std::fclose(f);
  }
  return 0;
}

int run_grad_check(std::uint64_t seed);

int run_repro(const std::string& which, const std::string& config_path, std::uint64_t seed,
              int seeds, int jobs, const std::string& out_dir) {
  const ExperimentConfig config = config_from_flag(config_path);
  const Logger log = stdout_logger();
  if (seeds < 1) throw ConfigError("repro: --seeds must be >= 1");
  fs::create_directories(out_dir);

  // Declared ordering assertions; failures are printed and turn into exit
  // code 4 after the report files are written.
  std::vector<std::string> failures;
  auto check = [&](const std::string& name, double lhs, double rhs, bool strict) {
    const bool ok = strict ? lhs > rhs : lhs >= rhs;
    LogLine("assert")
        .kv("name", name)
        .kv("lhs", lhs)
        .kv("rhs", rhs)
        .kv("ok", ok ? 1 : 0)
        .emit(log);
    if (!ok) failures.push_back(name);
  };

  if (which == "table1") {
    std::vector<WindowComparisonResult> results;
    for (int k = 1; k <= seeds; ++k) {
      results.push_back(run_window_comparison(config, seed + static_cast<std::uint64_t>(k), log,
                                              jobs));
    }
    write_window_comparison_files(out_dir, results, "table1");
    // Per-seed: block init beats random init at the same window, does not
    // fall below the 2-frame reference, and degrades at window 20.
    for (const WindowComparisonResult& r : results) {
      const std::string tag = "seed" + std::to_string(r.seed) + ".";
      check(tag + "w5_block>w5_random", r.row("w5_block").mean_iou, r.row("w5_random").mean_iou,
            true);
      check(tag + "w5_block>=w2", r.row("w5_block").mean_iou, r.row("w2").mean_iou, false);
      check(tag + "w20_block<w5_block", r.row("w5_block").mean_iou, r.row("w20_block").mean_iou,
            true);
    }
  } else if (which == "table3") {
    std::vector<ModeComparisonResult> results;
    for (int k = 1; k <= seeds; ++k) {
      results.push_back(run_mode_comparison(config, seed + static_cast<std::uint64_t>(k), log,
                                            jobs));
    }
    write_mode_comparison_files(out_dir, results, "table3");
    // Mean over seeds: temporal context helps, and the encoder-decoder's
    // full-sequence context shows up on the first frame.
    auto mean = [&](const char* mode, double ModeComparisonRow::*field) {
      double sum = 0.0;
      for (const ModeComparisonResult& r : results) sum += r.row(mode).*field;
      return sum / static_cast<double>(results.size());
    };
    check("mean.accuracy.encoder_decoder>=vanilla_lstm",
          mean("encoder_decoder", &ModeComparisonRow::accuracy),
          mean("vanilla_lstm", &ModeComparisonRow::accuracy), false);
    check("mean.accuracy.vanilla_lstm>=per_frame_linear",
          mean("vanilla_lstm", &ModeComparisonRow::accuracy),
          mean("per_frame_linear", &ModeComparisonRow::accuracy), false);
    check("mean.mean_ap.encoder_decoder>=vanilla_lstm",
          mean("encoder_decoder", &ModeComparisonRow::mean_ap),
          mean("vanilla_lstm", &ModeComparisonRow::mean_ap), false);
    check("mean.mean_ap.vanilla_lstm>=per_frame_linear",
          mean("vanilla_lstm", &ModeComparisonRow::mean_ap),
          mean("per_frame_linear", &ModeComparisonRow::mean_ap), false);
    check("mean.first_frame.encoder_decoder>=vanilla_lstm",
          mean("encoder_decoder", &ModeComparisonRow::first_frame_accuracy),
          mean("vanilla_lstm", &ModeComparisonRow::first_frame_accuracy), false);
  } else {
    throw ConfigError("repro: unknown report '" + which + "' (expected table1 or table3)");
  }
  LogLine("repro").kv("report", which).kv("seeds", seeds).kv("out", out_dir).emit(log);
  if (!failures.empty()) {
    std::string joined;
    for (const std::string& f : failures) {
      if (!joined.empty()) joined += ", ";
      joined += f;
    }
    throw AssertionFailure("repro " + which + ": ordering assertions failed: " + joined);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tubelet pipeline toolkit: synthetic videos, movement regression, "
               "tubelet growth, temporal classification, and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--config", config_path, "Experiment config JSON (defaults when omitted)");
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--jobs", jobs, "Worker threads for tubelet growth")->check(CLI::PositiveNumber);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Generate train/eval videos with proposals");
  std::string gen_data_out;
  gen_data->add_option("--out", gen_data_out, "Output directory")->required();

  // train-tpn
  auto* train_tpn_cmd = app.add_subcommand("train-tpn", "Train the movement regressor");
  std::string tpn_data, tpn_out, tpn_init, tpn_block_from;
  int tpn_window = 2;
  int tpn_epochs = -1;
  train_tpn_cmd->add_option("--data", tpn_data, "Dataset directory")->required();
  train_tpn_cmd->add_option("--window", tpn_window, "Window length")->check(CLI::Range(2, 64));
  train_tpn_cmd->add_option("--epochs", tpn_epochs, "Override the configured epoch count");
  train_tpn_cmd->add_option("--init", tpn_init, "Checkpoint to continue training from");
  train_tpn_cmd->add_option("--block-from", tpn_block_from,
                            "2-frame checkpoint to expand by block initialization");
  train_tpn_cmd->add_option("--out", tpn_out, "Output checkpoint")->required();

  // gen-tubelets
  auto* gen_tubelets = app.add_subcommand("gen-tubelets", "Grow tubelets from proposals");
  std::string gt_data, gt_model, gt_split = "eval", gt_out;
  bool gt_ideal = false;
  gen_tubelets->add_option("--data", gt_data, "Dataset directory")->required();
  gen_tubelets->add_option("--model", gt_model, "Movement-regressor checkpoint");
  gen_tubelets->add_option("--split", gt_split, "train or eval")
      ->check(CLI::IsMember({"train", "eval"}));
  gen_tubelets->add_flag("--ideal", gt_ideal,
                         "Write codec-expressible reference tubelets instead of predictions");
  gen_tubelets->add_option("--out", gt_out, "Output directory")->required();

  // train-lstm
  auto* train_lstm = app.add_subcommand("train-lstm", "Train a tubelet classifier");
  std::string tl_data, tl_tubelets, tl_mode = "encoder_decoder", tl_out;
  train_lstm->add_option("--data", tl_data, "Dataset directory")->required();
  train_lstm->add_option("--tubelets", tl_tubelets, "Tubelet directory (train split)")->required();
  train_lstm->add_option("--mode", tl_mode, "per_frame_linear, vanilla_lstm, or encoder_decoder")
      ->check(CLI::IsMember({"per_frame_linear", "vanilla_lstm", "encoder_decoder"}));
  train_lstm->add_option("--out", tl_out, "Output checkpoint")->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score tubelets against ground truth");
  std::string ev_data, ev_tubelets, ev_classifier, ev_out;
  evaluate_cmd->add_option("--data", ev_data, "Dataset directory")->required();
  evaluate_cmd->add_option("--tubelets", ev_tubelets, "Tubelet directory (eval split)")->required();
  evaluate_cmd->add_option("--classifier", ev_classifier, "Classifier checkpoint for detection metrics");
  evaluate_cmd->add_option("--out", ev_out, "Metrics JSON output path");

  // grad-check
  auto* grad_check_cmd = app.add_subcommand("grad-check", "Verify analytic gradients numerically");
  (void)grad_check_cmd;

  // repro
  auto* repro = app.add_subcommand("repro", "Reproduce a full comparison report");
  std::string repro_which, repro_out;
  int repro_seeds = 5;
  repro->add_option("report", repro_which, "table1 or table3")->required();
  repro->add_option("--seeds", repro_seeds, "Number of seeds to run");
  repro->add_option("--out", repro_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_data->parsed()) return run_gen_data(config_path, seed, gen_data_out);
    if (train_tpn_cmd->parsed()) {
      return run_train_tpn(config_path, seed, tpn_data, tpn_window, tpn_epochs, tpn_init,
                           tpn_block_from, tpn_out);
    }
    if (gen_tubelets->parsed()) {
      return run_gen_tubelets(config_path, gt_data, gt_model, gt_split, gt_ideal, jobs, gt_out);
    }
    if (train_lstm->parsed()) {
      return run_train_lstm(config_path, seed, tl_data, tl_tubelets, tl_mode, tl_out);
    }
    if (evaluate_cmd->parsed()) {
      return run_evaluate(config_path, ev_data, ev_tubelets, ev_classifier, ev_out);
    }
    if (grad_check_cmd->parsed()) return run_grad_check(seed);
    if (repro->parsed()) {
      return run_repro(repro_which, config_path, seed, repro_seeds, jobs, repro_out);
    }
    std::cerr << "error: no subcommand\n";
    return kExitInternal;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failure: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

namespace {

// Gradient checks over every trainable structure; exit code 4 when any
// analytic gradient disagrees with central differences beyond 1e-4.
int run_grad_check(std::uint64_t seed) {
  const Logger log = stdout_logger();
  constexpr double kEpsilon = 1e-4;
  constexpr double kTolerance = 1e-4;
  auto rng = make_rng(seed, stream_tag("cli-grad-check"));
  std::normal_distribution<double> dist(0.0, 1.0);
  double worst = 0.0;

  {  // dense layer + smoothed L1
    DenseLayer layer(6, 4, "gc.dense");
    layer.init_gaussian(0.5, rng);
    Vec x(6), target(4);
    for (double& v : x) v = dist(rng);
    for (double& v : target) v = dist(rng);
    Tensor* params[] = {&layer.W, &layer.b};
    auto loss_fn = [&] { return smoothed_l1_loss(layer.forward(x), target); };
    layer.W.zero_grad();
    layer.b.zero_grad();
    const Vec y = layer.forward(x);
    layer.backward(x, smoothed_l1_loss_grad(y, target));
    const GradCheckReport report = grad_check(loss_fn, params, kEpsilon);
    LogLine("grad-check").kv("structure", "dense_smoothed_l1").kv("max_rel_error", report.max_rel_error).emit(log);
    worst = std::max(worst, report.max_rel_error);
  }

  for (const ClassifierMode mode : {ClassifierMode::vanilla_lstm,
                                    ClassifierMode::encoder_decoder}) {
    TemporalClassifier model(mode, 5, 4, 3);
    model.init_gaussian(0.4, rng);
    std::vector<Vec> features(6, Vec(5));
    std::vector<int> labels = {1, 0, 3, 2, 1, 0};
    for (Vec& f : features) {
      for (double& v : f) v = dist(rng);
    }
    const std::vector<Tensor*> params = model.parameters();
    auto loss_fn = [&] {
      const std::vector<Vec> logits = model.forward(features);
      double total = 0.0;
      for (std::size_t t = 0; t < logits.size(); ++t) {
        total += cross_entropy_loss(logits[t], labels[t]);
      }
      return total;
    };
    for (Tensor* p : params) p->zero_grad();
    ClassifierCache cache;
    const std::vector<Vec> logits = model.forward(features, &cache);
    std::vector<Vec> dlogits(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
      Vec probs;
      cross_entropy_loss(logits[t], labels[t], &probs);
      dlogits[t] = cross_entropy_grad(probs, labels[t]);
    }
    model.backward(cache, dlogits);
    const GradCheckReport report = grad_check(loss_fn, params, kEpsilon);
    LogLine("grad-check")
        .kv("structure", classifier_mode_name(mode))
        .kv("max_rel_error", report.max_rel_error)
        .emit(log);
    worst = std::max(worst, report.max_rel_error);
  }

  LogLine("grad-check").kv("worst", worst).kv("tolerance", kTolerance).emit(log);
  if (!(worst < kTolerance)) {
    throw AssertionFailure("grad-check: worst relative error " + std::to_string(worst));
  }
  return 0;
}

}  // namespace
