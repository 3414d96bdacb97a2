#include "tubekit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tubekit/errors.hpp"

namespace tubekit {

TubeletQuality tubelet_quality(const TubeletProposal& predicted,
                               const TubeletProposal& reference) {
  if (predicted.anchor_frame != reference.anchor_frame ||
      predicted.boxes.size() != reference.boxes.size() || predicted.boxes.empty()) {
    throw std::invalid_argument("tubelet_quality: tubelets are not aligned");
  }
  TubeletQuality q;
  q.frames = static_cast<int>(predicted.boxes.size());
  for (std::size_t t = 0; t < predicted.boxes.size(); ++t) {
    const Box& p = predicted.boxes[t];
    const Box& r = reference.boxes[t];
    const double dx = std::abs(p.x - r.x);
    const double dy = std::abs(p.y - r.y);
    const double dw = std::abs(p.w - r.w);
    const double dh = std::abs(p.h - r.h);
    q.mad += (dx + dy + dw + dh) / 4.0;
    q.mrd += (dx / r.w + dy / r.h + dw / r.w + dh / r.h) / 4.0;
    q.mean_iou += iou(p, r);
  }
  q.mad /= q.frames;
  q.mrd /= q.frames;
  q.mean_iou /= q.frames;
  return q;
}

TubeletQuality aggregate_quality(const std::vector<TubeletQuality>& qualities) {
  if (qualities.empty()) throw std::invalid_argument("aggregate_quality: nothing to aggregate");
  TubeletQuality out;
  for (const TubeletQuality& q : qualities) {
    out.mad += q.mad;
    out.mrd += q.mrd;
    out.mean_iou += q.mean_iou;
    out.frames += q.frames;
  }
  const double n = static_cast<double>(qualities.size());
  out.mad /= n;
  out.mrd /= n;
  out.mean_iou /= n;
  return out;
}

QualityEval evaluate_tubelet_quality(const std::vector<const SyntheticVideo*>& videos,
                                     const std::vector<std::vector<TubeletProposal>>& tubelets) {
  if (videos.size() != tubelets.size()) {
    throw std::invalid_argument("evaluate_tubelet_quality: videos and tubelets must align");
  }
  QualityEval eval;
  std::vector<TubeletQuality> qualities;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const SyntheticVideo& video = *videos[v];
    for (const TubeletProposal& tp : tubelets[v]) {
      const int track_idx = match_track(video, tp.source_anchor, tp.anchor_frame);
      if (track_idx < 0) {
        ++eval.unmatched_tubelets;
        continue;
      }
      const TubeletProposal reference =
          ideal_tubelet(tp.source_anchor, video.tracks[static_cast<std::size_t>(track_idx)],
                        tp.anchor_frame, tp.length());
      qualities.push_back(tubelet_quality(tp, reference));
      ++eval.matched_tubelets;
    }
  }
  if (!qualities.empty()) eval.mean = aggregate_quality(qualities);
  return eval;
}

// ---------------------------------------------------------------------------
// Detection metrics
// ---------------------------------------------------------------------------

ApResult average_precision(const std::vector<Detection>& detections,
                           const std::vector<GtBox>& gt, double iou_threshold) {
  if (!(iou_threshold > 0.0) || iou_threshold > 1.0) {
    throw std::invalid_argument("average_precision: threshold must lie in (0, 1]");
  }
  ApResult result;
  result.num_gt = static_cast<int>(gt.size());
  if (gt.empty()) return result;

  // Ground-truth indices per frame, in input order, so ties keep the lower
  // ground-truth index.
  std::map<FrameRef, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t gi = 0; gi < gt.size(); ++gi) gt_by_frame[gt[gi].where].push_back(gi);
  std::vector<bool> gt_matched(gt.size(), false);

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  int tp = 0;
  int fp = 0;
  result.curve.reserve(detections.size());
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(detections.size());
  recall.reserve(detections.size());
  for (const std::size_t di : order) {
    const Detection& det = detections[di];
    int best = -1;
    double best_iou = 0.0;
    const auto it = gt_by_frame.find(det.where);
    if (it != gt_by_frame.end()) {
      for (const std::size_t gi : it->second) {
        if (gt_matched[gi]) continue;
        const double v = iou(det.box, gt[gi].box);
        if (v > best_iou) {
          best = static_cast<int>(gi);
          best_iou = v;
        }
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      gt_matched[static_cast<std::size_t>(best)] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(result.num_gt));
  }
  result.matched = tp;

  for (std::size_t i = 0; i < precision.size(); ++i) {
    result.curve.push_back(PrPoint{recall[i], precision[i]});
  }

  // All-points interpolation: area under the running-max precision envelope.
  double ap = 0.0;
  double best_precision = 0.0;
  for (std::size_t i = precision.size(); i-- > 0;) {
    best_precision = std::max(best_precision, precision[i]);
    const double r_lo = i == 0 ? 0.0 : recall[i - 1];
    ap += (recall[i] - r_lo) * best_precision;
  }
  result.ap = ap;
  return result;
}

std::vector<ScoredBox> flatten_tubelets(const std::vector<TubeletProposal>& tubelets,
                                        int video_index) {
  std::vector<ScoredBox> out;
  for (const TubeletProposal& tp : tubelets) {
    if (tp.scores.size() != tp.boxes.size()) {
      throw std::invalid_argument("flatten_tubelets: tubelet has no per-frame scores");
    }
    for (std::size_t t = 0; t < tp.boxes.size(); ++t) {
      out.push_back(ScoredBox{FrameRef{video_index, tp.anchor_frame + static_cast<int>(t)},
                              tp.boxes[t], tp.scores[t]});
    }
  }
  return out;
}

std::vector<double> corloc_per_class(const std::vector<const SyntheticVideo*>& videos,
                                     const std::vector<std::vector<ScoredBox>>& boxes,
                                     int num_classes) {
  if (videos.size() != boxes.size()) {
    throw std::invalid_argument("corloc_per_class: videos and boxes must align");
  }
  std::vector<double> out(static_cast<std::size_t>(num_classes), -1.0);

  // Candidate boxes per frame, preserving input order so score ties keep the
  // earlier box.
  std::map<FrameRef, std::vector<const ScoredBox*>> by_frame;
  for (const std::vector<ScoredBox>& per_video : boxes) {
    for (const ScoredBox& sb : per_video) by_frame[sb.where].push_back(&sb);
  }

  for (int c = 0; c < num_classes; ++c) {
    int eligible = 0;
    int localized = 0;
    for (std::size_t v = 0; v < videos.size(); ++v) {
      const SyntheticVideo& video = *videos[v];
      for (int frame = 0; frame < video.frames; ++frame) {
        std::vector<const Box*> gt;
        for (const ObjectTrack& track : video.tracks) {
          if (track.class_id == c && track.visibility[static_cast<std::size_t>(frame)]) {
            gt.push_back(&track.boxes[static_cast<std::size_t>(frame)]);
          }
        }
        if (gt.empty()) continue;
        ++eligible;

        const auto it = by_frame.find(FrameRef{static_cast<int>(v), frame});
        if (it == by_frame.end()) continue;
        const ScoredBox* top = nullptr;
        for (const ScoredBox* sb : it->second) {
          if (sb->scores.size() <= static_cast<std::size_t>(c + 1)) {
            throw std::invalid_argument("corloc_per_class: score vector too short");
          }
          if (top == nullptr || sb->scores[static_cast<std::size_t>(c + 1)] >
                                    top->scores[static_cast<std::size_t>(c + 1)]) {
            top = sb;
          }
        }
        double best_iou = 0.0;
        for (const Box* g : gt) best_iou = std::max(best_iou, iou(top->box, *g));
        if (best_iou > 0.5) ++localized;
      }
    }
    if (eligible > 0) {
      out[static_cast<std::size_t>(c)] =
          static_cast<double>(localized) / static_cast<double>(eligible);
    }
  }
  return out;
}

DetectionEval evaluate_detections(const std::vector<const SyntheticVideo*>& videos,
                                  const std::vector<std::vector<TubeletProposal>>& tubelets,
                                  int num_classes, double iou_threshold) {
  if (videos.size() != tubelets.size()) {
    throw std::invalid_argument("evaluate_detections: videos and tubelets must align");
  }
  std::vector<std::vector<ScoredBox>> boxes;
  boxes.reserve(tubelets.size());
  for (std::size_t v = 0; v < tubelets.size(); ++v) {
    boxes.push_back(flatten_tubelets(tubelets[v], static_cast<int>(v)));
  }

  DetectionEval eval;
  eval.ap_per_class.assign(static_cast<std::size_t>(num_classes), -1.0);
  int classes_with_gt = 0;
  double ap_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<GtBox> gt;
    for (std::size_t v = 0; v < videos.size(); ++v) {
      const SyntheticVideo& video = *videos[v];
      for (const ObjectTrack& track : video.tracks) {
        if (track.class_id != c) continue;
        for (int frame = 0; frame < video.frames; ++frame) {
          if (!track.visibility[static_cast<std::size_t>(frame)]) continue;
          gt.push_back(GtBox{FrameRef{static_cast<int>(v), frame},
                             track.boxes[static_cast<std::size_t>(frame)]});
        }
      }
    }
    if (gt.empty()) continue;

    std::vector<Detection> detections;
    for (const std::vector<ScoredBox>& per_video : boxes) {
      for (const ScoredBox& sb : per_video) {
        detections.push_back(
            Detection{sb.where, sb.box, sb.scores[static_cast<std::size_t>(c + 1)]});
      }
    }
    const ApResult ap = average_precision(detections, gt, iou_threshold);
    eval.ap_per_class[static_cast<std::size_t>(c)] = ap.ap;
    ap_sum += ap.ap;
    ++classes_with_gt;
  }
  if (classes_with_gt > 0) eval.mean_ap = ap_sum / classes_with_gt;

  eval.corloc_per_class = corloc_per_class(videos, boxes, num_classes);
  int corloc_classes = 0;
  double corloc_sum = 0.0;
  for (const double v : eval.corloc_per_class) {
    if (v >= 0.0) {
      corloc_sum += v;
      ++corloc_classes;
    }
  }
  if (corloc_classes > 0) eval.mean_corloc = corloc_sum / corloc_classes;
  return eval;
}

SequenceAccuracy sequence_accuracy(const TemporalClassifier& model,
                                   const std::vector<SequenceSample>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("sequence_accuracy: empty corpus");
  SequenceAccuracy acc;
  int correct = 0;
  int first_correct = 0;
  for (const SequenceSample& s : corpus) {
    const std::vector<Vec> logits = model.forward(s.features);
    for (std::size_t t = 0; t < logits.size(); ++t) {
      int arg = 0;
      for (std::size_t j = 1; j < logits[t].size(); ++j) {
        if (logits[t][j] > logits[t][static_cast<std::size_t>(arg)]) arg = static_cast<int>(j);
      }
      if (arg == s.labels[t]) {
        ++correct;
        if (t == 0) ++first_correct;
      }
    }
    acc.frames += static_cast<int>(logits.size());
    ++acc.sequences;
  }
  acc.overall = static_cast<double>(correct) / static_cast<double>(acc.frames);
  acc.first_frame = static_cast<double>(first_correct) / static_cast<double>(acc.sequences);
  return acc;
}

}  // namespace tubekit
