#include "tubekit/tubelet.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "tubekit/errors.hpp"

namespace tubekit {

std::vector<TubeletProposal> generate_batch(const TpnModel& model, const FeatureOracle& oracle,
                                            std::vector<Box> anchors, int anchor_frame, int length,
                                            double min_box_size) {
  const SyntheticVideo& video = oracle.video();
  if (anchor_frame < 0 || anchor_frame >= video.frames) {
    throw std::invalid_argument("generate_batch: anchor frame out of range");
  }
  if (length < 1 || anchor_frame + length > video.frames) {
    throw std::invalid_argument("generate_batch: length does not fit the video");
  }
  if (model.feature_dim != video.oracle.feature_dim) {
    throw std::invalid_argument("generate_batch: model feature dim does not match the oracle");
  }
  const int window = model.window;
  const std::size_t n = anchors.size();

  std::vector<TubeletProposal> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].anchor_frame = anchor_frame;
    out[i].source_anchor = anchors[i];
    out[i].boxes.reserve(static_cast<std::size_t>(length));
    out[i].boxes.push_back(anchors[i]);
  }
  if (n == 0 || length == 1) return out;

  // All tubelets advance in lockstep: at step `s` every tubelet's current box
  // sits at frame anchor_frame + s, so feature pooling for the window's
  // frames can share one batched call per frame.
  int s = 0;
  std::vector<Box> current = std::move(anchors);
  while (s + 1 < length) {
    // Pooled features for the full window, even when it extends past the
    // requested length or the video: frames past the end clamp to the last
    // frame, and surplus outputs are truncated below.
    std::vector<Vec> features(n);
    const std::size_t f = static_cast<std::size_t>(model.feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
      features[i].reserve(static_cast<std::size_t>(window) * f);
    }
    for (int t = 0; t < window; ++t) {
      const int frame = std::min(anchor_frame + s + t, video.frames - 1);
      const std::vector<Vec> frame_features = oracle.regression_features(current, frame);
      for (std::size_t i = 0; i < n; ++i) {
        features[i].insert(features[i].end(), frame_features[i].begin(), frame_features[i].end());
      }
    }

    const int take = std::min(window - 1, length - 1 - s);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec movements = predict_movements(model, features[i]);
      for (int k = 1; k <= take; ++k) {
        const CappedDecode decode = decode_movement_capped(current[i], movement_at(movements, k - 1));
        if (decode.capped) ++out[i].capped_decodes;
        const Box clamped = clamp_to_frame(decode.box, video.width, video.height, min_box_size);
        if (!(clamped == decode.box)) ++out[i].clamped_boxes;
        out[i].boxes.push_back(clamped);
      }
      current[i] = out[i].boxes.back();  // re-anchor on the last decoded box
    }
    s += take;
  }
  return out;
}

TubeletProposal generate_tubelet(const TpnModel& model, const FeatureOracle& oracle,
                                 const Box& anchor, int anchor_frame, int length,
                                 double min_box_size) {
  return generate_batch(model, oracle, {anchor}, anchor_frame, length, min_box_size).front();
}

std::vector<TubeletProposal> generate_all(const TpnModel& model, const FeatureOracle& oracle,
                                          const std::vector<int>& anchor_frames,
                                          double min_box_size, int jobs) {
  const SyntheticVideo& video = oracle.video();
  if (jobs < 1) throw ConfigError("generate_all: jobs must be >= 1");

  std::vector<TubeletProposal> out;
  for (const int anchor_frame : anchor_frames) {
    const ProposalSet* proposals = video.proposals_at(anchor_frame);
    if (proposals == nullptr) {
      throw MissingInputError("generate_all: no proposals at frame " +
                              std::to_string(anchor_frame));
    }
    const int length = video.frames - anchor_frame;
    const std::vector<Box>& anchors = proposals->boxes;
    const std::size_t n = anchors.size();

    const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                                     std::max<std::size_t>(n, 1));
    if (chunks <= 1) {
      std::vector<TubeletProposal> grown =
          generate_batch(model, oracle, anchors, anchor_frame, length, min_box_size);
      out.insert(out.end(), std::make_move_iterator(grown.begin()),
                 std::make_move_iterator(grown.end()));
      continue;
    }

    // Chunked anchors, one thread each. Batched growth is bit-identical to
    // sequential growth, so the split cannot change any output.
    std::vector<std::vector<TubeletProposal>> parts(chunks);
    std::vector<std::thread> threads;
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = n * c / chunks;
      const std::size_t end = n * (c + 1) / chunks;
      threads.emplace_back([&, c, begin, end] {
        std::vector<Box> span(anchors.begin() + static_cast<std::ptrdiff_t>(begin),
                              anchors.begin() + static_cast<std::ptrdiff_t>(end));
        parts[c] = generate_batch(model, oracle, std::move(span), anchor_frame, length,
                                  min_box_size);
      });
    }
    for (std::thread& t : threads) t.join();
    for (std::vector<TubeletProposal>& part : parts) {
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
  }
  return out;
}

TubeletProposal ideal_tubelet(const Box& anchor, const ObjectTrack& track, int anchor_frame,
                              int length) {
  if (anchor_frame < 0 || length < 1 ||
      static_cast<std::size_t>(anchor_frame + length) > track.boxes.size()) {
    throw std::invalid_argument("ideal_tubelet: window does not fit the track");
  }
  TubeletProposal out;
  out.anchor_frame = anchor_frame;
  out.source_anchor = anchor;
  out.boxes.reserve(static_cast<std::size_t>(length));
  out.boxes.push_back(anchor);
  const Box& g0 = track.boxes[static_cast<std::size_t>(anchor_frame)];
  for (int t = 1; t < length; ++t) {
    const MovementDelta d = encode_movement(g0, track.boxes[static_cast<std::size_t>(anchor_frame + t)]);
    out.boxes.push_back(decode_movement(anchor, d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tubelet container
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTubeletHeader = "# tubekit.tubelets v1";

void append_fixed(std::string& line, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), " %.6f", v);
  line += buf;
}

}  // namespace

void save_tubelets(const std::vector<TubeletProposal>& tubelets,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("tubelets: cannot open for writing: " + path.string());
  out << kTubeletHeader << '\n';
  for (std::size_t id = 0; id < tubelets.size(); ++id) {
    const TubeletProposal& tp = tubelets[id];
    const std::size_t score_dim = tp.scores.empty() ? 0 : tp.scores.front().size();
    if (!tp.scores.empty() && tp.scores.size() != tp.boxes.size()) {
      throw std::invalid_argument("tubelets: scores must cover every frame or none");
    }
    std::string head = "tubelet " + std::to_string(id) + " anchor " +
                       std::to_string(tp.anchor_frame) + " source";
    append_fixed(head, tp.source_anchor.x);
    append_fixed(head, tp.source_anchor.y);
    append_fixed(head, tp.source_anchor.w);
    append_fixed(head, tp.source_anchor.h);
    head += " capped " + std::to_string(tp.capped_decodes) + " clamped " +
            std::to_string(tp.clamped_boxes) + " scores " + std::to_string(score_dim);
    out << head << '\n';
    for (std::size_t t = 0; t < tp.boxes.size(); ++t) {
      std::string line = std::to_string(tp.anchor_frame + static_cast<int>(t));
      append_fixed(line, tp.boxes[t].x);
      append_fixed(line, tp.boxes[t].y);
      append_fixed(line, tp.boxes[t].w);
      append_fixed(line, tp.boxes[t].h);
      if (score_dim > 0) {
        for (double s : tp.scores[t]) append_fixed(line, s);
      }
      out << line << '\n';
    }
  }
  if (!out) throw std::runtime_error("tubelets: write failed: " + path.string());
}

std::vector<TubeletProposal> load_tubelets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("tubelets: cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTubeletHeader) {
    throw ConfigError("tubelets: bad header in " + path.string());
  }

  std::vector<TubeletProposal> out;
  std::size_t score_dim = 0;
  int next_frame = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string first;
    ss >> first;
    if (first == "tubelet") {
      if (!out.empty() && out.back().boxes.empty()) {
        throw ConfigError("tubelets: tubelet without frames in " + path.string());
      }
      std::size_t id = 0;
      std::string kw_anchor, kw_source, kw_capped, kw_clamped, kw_scores;
      TubeletProposal tp;
      double x = 0, y = 0, w = 0, h = 0;
      ss >> id >> kw_anchor >> tp.anchor_frame >> kw_source >> x >> y >> w >> h >> kw_capped >>
          tp.capped_decodes >> kw_clamped >> tp.clamped_boxes >> kw_scores >> score_dim;
      if (!ss || kw_anchor != "anchor" || kw_source != "source" || kw_capped != "capped" ||
          kw_clamped != "clamped" || kw_scores != "scores" || id != out.size()) {
        throw ConfigError("tubelets: malformed tubelet line in " + path.string());
      }
      tp.source_anchor = Box(x, y, w, h);
      next_frame = tp.anchor_frame;
      out.push_back(std::move(tp));
      continue;
    }
    if (out.empty()) throw ConfigError("tubelets: frame row before any tubelet in " + path.string());
    TubeletProposal& tp = out.back();
    int frame = 0;
    double x = 0, y = 0, w = 0, h = 0;
    std::istringstream row(line);
    row >> frame >> x >> y >> w >> h;
    if (!row || frame != next_frame) {
      throw ConfigError("tubelets: malformed frame row in " + path.string());
    }
    tp.boxes.emplace_back(x, y, w, h);
    if (score_dim > 0) {
      Vec scores(score_dim);
      for (double& s : scores) row >> s;
      if (!row) throw ConfigError("tubelets: missing scores in " + path.string());
      tp.scores.push_back(std::move(scores));
    }
    double extra = 0.0;
    if (row >> extra) throw ConfigError("tubelets: trailing values in " + path.string());
    ++next_frame;
  }
  if (!out.empty() && out.back().boxes.empty()) {
    throw ConfigError("tubelets: tubelet without frames in " + path.string());
  }
  return out;
}

}  // namespace tubekit
