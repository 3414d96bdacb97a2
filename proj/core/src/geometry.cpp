#include "tubekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tubekit {

namespace {

void require_valid(const Box& b, const char* who) {
  if (!(std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h))) {
    throw std::invalid_argument(std::string(who) + ": box fields must be finite");
  }
  if (!(b.w > 0.0 && b.h > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": box sizes must be positive");
  }
}

}  // namespace

Box::Box(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
  require_valid(*this, "Box");
}

Box Box::from_corners(double x1, double y1, double x2, double y2) {
  return Box(0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1);
}

bool MovementDelta::finite() const {
  return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(dw) && std::isfinite(dh);
}

MovementDelta MovementDelta::as_raw() const {
  if (kind == DeltaKind::normalized) {
    throw std::invalid_argument("MovementDelta::as_raw: normalized deltas must be de-normalized");
  }
  MovementDelta out = *this;
  out.kind = DeltaKind::raw;
  return out;
}

double iou(const Box& a, const Box& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double ix = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

MovementDelta encode_movement(const Box& anchor, const Box& current) {
  require_valid(anchor, "encode_movement");
  require_valid(current, "encode_movement");
  MovementDelta d;
  d.dx = (current.x - anchor.x) / anchor.w;
  d.dy = (current.y - anchor.y) / anchor.h;
  d.dw = std::log(current.w / anchor.w);
  d.dh = std::log(current.h / anchor.h);
  d.kind = DeltaKind::raw;
  return d;
}

namespace {

Box decode_unchecked(const Box& anchor, const MovementDelta& d) {
  return Box(anchor.x + d.dx * anchor.w, anchor.y + d.dy * anchor.h, anchor.w * std::exp(d.dw),
             anchor.h * std::exp(d.dh));
}

void require_decodable(const Box& anchor, const MovementDelta& d, double cap) {
  require_valid(anchor, "decode_movement");
  if (d.kind != DeltaKind::raw) {
    throw std::invalid_argument("decode_movement: delta must be raw (de-normalize or as_raw first)");
  }
  if (!d.finite()) throw std::invalid_argument("decode_movement: delta components must be finite");
  if (!(cap > 0.0)) throw std::invalid_argument("decode_movement: log size cap must be positive");
}

}  // namespace

Box decode_movement(const Box& anchor, const MovementDelta& delta, double log_size_cap) {
  require_decodable(anchor, delta, log_size_cap);
  if (std::abs(delta.dw) > log_size_cap || std::abs(delta.dh) > log_size_cap) {
    throw std::domain_error("decode_movement: |dw| or |dh| exceeds the log size cap");
  }
  return decode_unchecked(anchor, delta);
}

CappedDecode decode_movement_capped(const Box& anchor, const MovementDelta& delta,
                                    double log_size_cap) {
  require_decodable(anchor, delta, log_size_cap);
  MovementDelta d = delta;
  bool capped = false;
  if (std::abs(d.dw) > log_size_cap) {
    d.dw = std::clamp(d.dw, -log_size_cap, log_size_cap);
    capped = true;
  }
  if (std::abs(d.dh) > log_size_cap) {
    d.dh = std::clamp(d.dh, -log_size_cap, log_size_cap);
    capped = true;
  }
  return CappedDecode{decode_unchecked(anchor, d), capped};
}

double smoothed_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smoothed_l1_grad(double x) { return std::clamp(x, -1.0, 1.0); }

Box clamp_to_frame(const Box& box, double width, double height, double min_size) {
  require_valid(box, "clamp_to_frame");
  if (!(min_size > 0.0) || min_size > width || min_size > height) {
    throw std::invalid_argument("clamp_to_frame: need 0 < min_size <= frame sides");
  }
  const double w = std::clamp(box.w, min_size, width);
  const double h = std::clamp(box.h, min_size, height);
  const double x = std::clamp(box.x, 0.5 * w, width - 0.5 * w);
  const double y = std::clamp(box.y, 0.5 * h, height - 0.5 * h);
  return Box(x, y, w, h);
}

}  // namespace tubekit
