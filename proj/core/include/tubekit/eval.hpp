#pragma once

#include <compare>
#include <vector>

#include "tubekit/classifier.hpp"
#include "tubekit/geometry.hpp"
#include "tubekit/synthworld.hpp"
#include "tubekit/tubelet.hpp"

namespace tubekit {

// ---------------------------------------------------------------------------
// Tubelet quality against the best codec-expressible reference
// ---------------------------------------------------------------------------

struct TubeletQuality {
  double mad{0.0};       // mean absolute displacement over x, y, w, h, px
  double mrd{0.0};       // displacements divided by the reference box size
  double mean_iou{0.0};  // mean IoU against the reference tubelet
  int frames{0};
};

// Per-frame comparison of a predicted tubelet against a reference tubelet of
// the same anchor frame and length. x and w displacements are divided by the
// reference width for the relative metric; y and h by the reference height.
// The anchor frame participates like every other frame.
TubeletQuality tubelet_quality(const TubeletProposal& predicted, const TubeletProposal& reference);

// Unweighted mean over per-tubelet qualities; frames accumulate.
TubeletQuality aggregate_quality(const std::vector<TubeletQuality>& qualities);

struct QualityEval {
  TubeletQuality mean;
  int matched_tubelets{0};
  int unmatched_tubelets{0};  // no track overlapped the source anchor enough
};

// Matches each tubelet's source anchor to a track (IoU > 0.5 at the anchor
// frame), builds that track's ideal tubelet from the same anchor, and
// averages the per-tubelet quality. tubelets[v] must belong to videos[v].
QualityEval evaluate_tubelet_quality(const std::vector<const SyntheticVideo*>& videos,
                                     const std::vector<std::vector<TubeletProposal>>& tubelets);

// ---------------------------------------------------------------------------
// Detection metrics
// ---------------------------------------------------------------------------

struct FrameRef {
  int video{0};
  int frame{0};
  auto operator<=>(const FrameRef&) const = default;
};

struct Detection {
  FrameRef where;
  Box box;
  double score{0.0};
};

struct GtBox {
  FrameRef where;
  Box box;
};

struct PrPoint {
  double recall{0.0};
  double precision{0.0};
};

struct ApResult {
  double ap{0.0};
  int num_gt{0};
  int matched{0};
  std::vector<PrPoint> curve;  // one point per detection, in rank order
};

// Single-class average precision. Detections are ranked by score descending
// (ties keep the lower input index); each is greedily matched to the
// still-unmatched ground-truth box in its frame with the highest IoU (ties
// keep the lower ground-truth index) and counts as a true positive when that
// IoU is >= iou_threshold. The summary is the all-points interpolated area
// under the precision-recall curve. With no ground truth the result is
// ap = 0, num_gt = 0.
ApResult average_precision(const std::vector<Detection>& detections,
                           const std::vector<GtBox>& gt, double iou_threshold = 0.5);

// A box with the full per-label score vector, flattened out of a tubelet.
struct ScoredBox {
  FrameRef where;
  Box box;
  Vec scores;  // num_classes + 1 labels, background first
};

// One ScoredBox per tubelet frame. Tubelets must carry scores.
std::vector<ScoredBox> flatten_tubelets(const std::vector<TubeletProposal>& tubelets,
                                        int video_index);

// Per class: over frames with at least one visible ground-truth object of
// that class, the fraction where the top-scoring candidate box for the class
// localizes one of them with IoU > 0.5 (strict). Frames without candidates
// count as misses. Returns one value per class; classes absent from the
// ground truth get -1.
std::vector<double> corloc_per_class(const std::vector<const SyntheticVideo*>& videos,
                                     const std::vector<std::vector<ScoredBox>>& boxes,
                                     int num_classes);

struct DetectionEval {
  std::vector<double> ap_per_class;      // -1 for classes without ground truth
  std::vector<double> corloc_per_class;  // -1 for classes without ground truth
  double mean_ap{0.0};                   // over classes with ground truth
  double mean_corloc{0.0};
};

// End-to-end detection metrics from scored tubelets: detections for class c
// use score component c+1. tubelets[v] must belong to videos[v].
DetectionEval evaluate_detections(const std::vector<const SyntheticVideo*>& videos,
                                  const std::vector<std::vector<TubeletProposal>>& tubelets,
                                  int num_classes, double iou_threshold = 0.5);

// ---------------------------------------------------------------------------
// Sequence classification metrics
// ---------------------------------------------------------------------------

struct SequenceAccuracy {
  double overall{0.0};      // argmax label == true label, over all frames
  double first_frame{0.0};  // same, restricted to each sequence's first frame
  int frames{0};
  int sequences{0};
};

SequenceAccuracy sequence_accuracy(const TemporalClassifier& model,
                                   const std::vector<SequenceSample>& corpus);

}  // namespace tubekit
