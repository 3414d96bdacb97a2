#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "tubekit/log.hpp"
#include "tubekit/nncore.hpp"
#include "tubekit/synthworld.hpp"
#include "tubekit/tubelet.hpp"

namespace tubekit {

// How tubelet frames are scored:
//   per_frame_linear : logits[t] = Head(features[t]); no temporal state.
//   vanilla_lstm     : forward LSTM; logits[t] = Head(h_t). Frame t sees
//                      only frames <= t.
//   encoder_decoder  : an encoder LSTM consumes the whole sequence, its final
//                      state seeds a decoder LSTM that consumes the sequence
//                      reversed; logits for frame t come from the decoder
//                      step that revisits frame t. Every frame, including the
//                      first, is scored with full-sequence context.
enum class ClassifierMode : std::uint8_t { per_frame_linear, vanilla_lstm, encoder_decoder };

const char* classifier_mode_name(ClassifierMode mode);
ClassifierMode classifier_mode_from_name(std::string_view name);

// One classification training sequence: per-frame features and labels.
// Label 0 is background; object class c maps to label c + 1.
struct SequenceSample {
  std::vector<Vec> features;
  std::vector<int> labels;
};

// Intermediates of one forward pass, kept for backpropagation.
struct ClassifierCache {
  std::vector<Vec> features;
  std::vector<LstmStepCache> encoder_steps;
  std::vector<LstmStepCache> decoder_steps;
  std::vector<Vec> head_inputs;  // indexed by frame, not by decoder step
  std::vector<Vec> logits;
};

class TemporalClassifier {
 public:
  TemporalClassifier() = default;
  TemporalClassifier(ClassifierMode mode, int feature_dim, int hidden_dim, int num_classes);

  ClassifierMode mode() const { return mode_; }
  int feature_dim() const { return feature_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int num_classes() const { return num_classes_; }
  int num_labels() const { return num_classes_ + 1; }

  void init_gaussian(double stddev, std::mt19937_64& rng);

  // Per-frame logits over num_classes()+1 labels, aligned with the input
  // frame order for every mode.
  std::vector<Vec> forward(const std::vector<Vec>& features,
                           ClassifierCache* cache = nullptr) const;

  // Per-frame softmax distributions.
  std::vector<Vec> classify(const std::vector<Vec>& features) const;

  // Accumulates parameter gradients for d(loss)/d(logits) aligned with the
  // input frame order. Gradients with respect to the features are discarded.
  void backward(const ClassifierCache& cache, const std::vector<Vec>& dlogits);

  // The tensors the mode actually uses; unused cells own no parameters.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

 private:
  ClassifierMode mode_{ClassifierMode::encoder_decoder};
  int feature_dim_{0};
  int hidden_dim_{0};
  int num_classes_{0};
  LstmCell encoder_;
  LstmCell decoder_;
  DenseLayer head_;
};

struct ClassifierTrainConfig {
  ClassifierMode mode{ClassifierMode::encoder_decoder};
  int hidden_dim{64};
  int num_classes{0};  // 0 infers the class count from the labels
  int iterations{600};
  int batch_size{24};
  double learning_rate{0.1};
  double momentum{0.9};
  double lr_decay{0.5};  // multiplies the rate every decay_every iterations
  int decay_every{200};  // <= 0 disables the decay
  double init_std{0.01};
  double grad_clip{0.0};  // global-norm bound; <= 0 disables
  std::uint64_t seed{0};
};

struct ClassifierTrainResult {
  TemporalClassifier model;
  std::vector<double> iteration_losses;  // mean cross entropy per frame
};

// Minibatch SGD with momentum on mean per-frame cross entropy. Samples are
// drawn from a reshuffled queue so every sequence is visited once per cycle.
// Deterministic in (corpus, config).
ClassifierTrainResult train_classifier(const std::vector<SequenceSample>& corpus,
                                       const ClassifierTrainConfig& config,
                                       const Logger& logger = nullptr);

// Mean per-frame cross entropy of the model on a corpus.
double classifier_loss(const TemporalClassifier& model, const std::vector<SequenceSample>& corpus);

// Per-frame labels for a tubelet: the class (plus one) of the visible track
// with the highest IoU against the tubelet box when that IoU exceeds 0.5,
// else background (0).
std::vector<int> label_tubelet_frames(const TubeletProposal& tubelet, const SyntheticVideo& video);

// Classification sequences for a set of tubelets: pooled classification
// features and per-frame labels.
std::vector<SequenceSample> build_sequence_samples(const std::vector<TubeletProposal>& tubelets,
                                                   const FeatureOracle& oracle);

// Fills tubelet.scores with per-frame softmax distributions from the model.
void apply_scores(std::vector<TubeletProposal>& tubelets, const TemporalClassifier& model,
                  const FeatureOracle& oracle);

// Checkpoint round trip. The file carries mode, dimensions, and every tensor.
void save_classifier(const TemporalClassifier& model, const std::filesystem::path& path);
TemporalClassifier load_classifier(const std::filesystem::path& path);

}  // namespace tubekit
