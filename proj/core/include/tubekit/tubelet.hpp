#pragma once

#include <filesystem>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/tpn.hpp"

namespace tubekit {

// A tubelet proposal: one box per frame starting at anchor_frame, produced by
// iterating the movement regressor window by window from a static anchor box.
struct TubeletProposal {
  int anchor_frame{0};
  Box source_anchor;        // the proposal box the tubelet grew from
  std::vector<Box> boxes;   // boxes[t] is the box at frame anchor_frame + t
  int capped_decodes{0};    // movement decodes whose log-size hit the cap
  int clamped_boxes{0};     // boxes pulled back inside the frame
  std::vector<Vec> scores;  // optional per-frame class scores, filled later

  int length() const { return static_cast<int>(boxes.size()); }
};

// Grows tubelets from `anchors` at `anchor_frame` through frame length-1
// (length counts frames including the anchor frame). Windows are chained:
// each full window contributes window-1 new boxes and the next window
// re-anchors on the last decoded box. The final window may extend past the
// requested length or the video; it still runs in full, its outputs are
// truncated to the requested length, and feature pooling clamps frame
// indices past the end of the video to the last frame. Decodes use the
// capped variant and every box is clamped into the frame with sides >=
// min_box_size; both events are counted per tubelet. Batched over anchors:
// per-frame feature context is shared, and results are bit-identical to
// growing each anchor alone.
std::vector<TubeletProposal> generate_batch(const TpnModel& model, const FeatureOracle& oracle,
                                            std::vector<Box> anchors, int anchor_frame, int length,
                                            double min_box_size = 4.0);

TubeletProposal generate_tubelet(const TpnModel& model, const FeatureOracle& oracle,
                                 const Box& anchor, int anchor_frame, int length,
                                 double min_box_size = 4.0);

// Tubelets for every proposal box at each given anchor frame, covering
// [anchor_frame, video.frames). `jobs` > 1 splits anchors across threads;
// output order and content are independent of jobs.
std::vector<TubeletProposal> generate_all(const TpnModel& model, const FeatureOracle& oracle,
                                          const std::vector<int>& anchor_frames,
                                          double min_box_size = 4.0, int jobs = 1);

// The best tubelet the codec can express for a track: every box is
// decode(anchor, encode(track frame-1 box, track frame-t box)), i.e. the
// track's own movements replayed from the proposal anchor. Ground-truth
// reference for tubelet quality metrics.
TubeletProposal ideal_tubelet(const Box& anchor, const ObjectTrack& track, int anchor_frame,
                              int length);

// Plain-text tubelet container (one row per frame, %.6f coordinates, optional
// scores). Stable byte-for-byte across identical runs.
void save_tubelets(const std::vector<TubeletProposal>& tubelets,
                   const std::filesystem::path& path);
std::vector<TubeletProposal> load_tubelets(const std::filesystem::path& path);

}  // namespace tubekit
