#pragma once

#include <cstdint>

namespace tubekit {

// Axis-aligned box in center form: (x, y) is the center, (w, h) the size in
// pixels. Sizes are strictly positive and all fields finite at all times.
struct Box {
  double x{0.0};
  double y{0.0};
  double w{1.0};
  double h{1.0};

  Box() = default;
  Box(double x, double y, double w, double h);

  static Box from_corners(double x1, double y1, double x2, double y2);

  double left() const { return x - 0.5 * w; }
  double right() const { return x + 0.5 * w; }
  double top() const { return y - 0.5 * h; }
  double bottom() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  bool operator==(const Box&) const = default;
};

// Provenance of a movement delta as it flows through the pipeline:
//   raw        decodable against an anchor box
//   target     training target, encoded from ground truth (raw-valued)
//   normalized z-scored per frame offset; must be de-normalized before decode
enum class DeltaKind : std::uint8_t { raw, target, normalized };

// Relative movement between an anchor box and a current box:
//   dx = (x_cur - x_anchor) / w_anchor     dy = (y_cur - y_anchor) / h_anchor
//   dw = log(w_cur / w_anchor)             dh = log(h_cur / h_anchor)
// All four components are finite.
struct MovementDelta {
  double dx{0.0};
  double dy{0.0};
  double dw{0.0};
  double dh{0.0};
  DeltaKind kind{DeltaKind::raw};

  bool finite() const;

  // Re-tags a raw-valued delta (raw or target) as raw so it can be decoded.
  // Throws std::invalid_argument for normalized deltas, which live in z-score
  // space and must go through de-normalization instead.
  MovementDelta as_raw() const;

  bool operator==(const MovementDelta&) const = default;
};

// Intersection over union of two valid boxes; result in [0, 1], symmetric,
// exactly 1 for identical boxes and 0 for disjoint ones.
double iou(const Box& a, const Box& b);

// Encodes the movement from `anchor` to `current`. encode(B, B) is exactly
// (0, 0, 0, 0). The encoding is invariant under common translation of both
// boxes and under common uniform scaling about any point.
MovementDelta encode_movement(const Box& anchor, const Box& current);

// Largest |dw| or |dh| a decode will accept; exp() beyond this produces boxes
// that are meaningless downstream, so such deltas are treated as malformed.
inline constexpr double kDecodeLogSizeCap = 10.0;

// Inverse of encode_movement:
//   x = x_a + dx * w_a    y = y_a + dy * h_a
//   w = w_a * exp(dw)     h = h_a * exp(dh)
// Requires delta.kind == raw (use MovementDelta::as_raw() for targets).
// Throws std::domain_error when |dw| or |dh| exceeds `log_size_cap`.
Box decode_movement(const Box& anchor, const MovementDelta& delta,
                    double log_size_cap = kDecodeLogSizeCap);

struct CappedDecode {
  Box box;
  bool capped{false};  // true when dw or dh had to be clamped to the cap
};

// Clamping variant used during tubelet generation: out-of-cap size components
// are clamped to +/-log_size_cap and the event is reported instead of thrown.
CappedDecode decode_movement_capped(const Box& anchor, const MovementDelta& delta,
                                    double log_size_cap = kDecodeLogSizeCap);

// Smoothed L1 penalty
//   d(x) = 0.5 x^2        if |x| < 1
//          |x| - 0.5      otherwise
// and its derivative clamp(x, -1, 1). Both are continuous at |x| = 1.
double smoothed_l1(double x);
double smoothed_l1_grad(double x);

// Shrinks a box to fit inside the frame [0, width] x [0, height]: sizes are
// clamped to [min_size, frame size], then the center is moved the minimal
// distance that puts the box fully inside. Requires min_size <= min(width,
// height).
Box clamp_to_frame(const Box& box, double width, double height, double min_size);

}  // namespace tubekit
