#include "zoomtrace/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zt::geo {

namespace {

constexpr double kScale = static_cast<double>(kRelativeScale);

GeometryError err(GeometryError::Kind k, const std::string& msg) { return GeometryError(k, msg); }

int round_relative(double coord, double origin, double extent) {
  // Multiply before dividing so grid-multiple inputs stay exact.
  return static_cast<int>(std::round((coord - origin) * kScale / extent));
}

}  // namespace

const char* to_string(ZoomLevel level) {
  switch (level) {
    case ZoomLevel::L0: return "L0";
    case ZoomLevel::L1: return "L1";
    case ZoomLevel::L2: return "L2";
  }
  return "?";
}

ZoomLevel next_level(ZoomLevel level) {
  return level == ZoomLevel::L0 ? ZoomLevel::L1 : ZoomLevel::L2;
}

void FrameBox::check() const {
  if (!(width > 0) || !(height > 0)) {
    throw err(GeometryError::Kind::invalid_box, "frame box must have positive extent in frame '" + frame_id + "'");
  }
  if (x_min < 0 || y_min < 0) {
    throw err(GeometryError::Kind::invalid_box, "frame box origin must be nonnegative in frame '" + frame_id + "'");
  }
}

bool FrameBox::within(double frame_width, double frame_height, double tol) const {
  return x_min >= -tol && y_min >= -tol && x_max() <= frame_width + tol && y_max() <= frame_height + tol;
}

bool NormBox::valid(long long x1, long long y1, long long x2, long long y2) {
  return 0 <= x1 && x1 <= x2 && x2 <= kRelativeScale && 0 <= y1 && y1 <= y2 && y2 <= kRelativeScale;
}

NormBox NormBox::make(long long x1, long long y1, long long x2, long long y2) {
  if (!valid(x1, y1, x2, y2)) {
    std::ostringstream os;
    os << "relative box [" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << "] violates 0 <= x1 <= x2 <= 1000";
    throw err(GeometryError::Kind::invalid_box, os.str());
  }
  return NormBox{static_cast<int>(x1), static_cast<int>(y1), static_cast<int>(x2), static_cast<int>(y2)};
}

std::optional<NormBox> NormBox::try_make(const std::array<long long, 4>& c) {
  if (!valid(c[0], c[1], c[2], c[3])) return std::nullopt;
  return NormBox{static_cast<int>(c[0]), static_cast<int>(c[1]), static_cast<int>(c[2]), static_cast<int>(c[3])};
}

std::string to_string(const NormBox& b) {
  std::ostringstream os;
  os << '[' << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ']';
  return os.str();
}

RealBox to_real(const NormBox& b) { return RealBox{double(b.x1), double(b.y1), double(b.x2), double(b.y2)}; }

FrameChain FrameChain::global(double width, double height, std::string view_id) {
  FrameChain c;
  c.links.push_back(ChainLink{FrameBox{kGlobalFrameId, 0, 0, width, height}, std::move(view_id)});
  return c;
}

FrameChain FrameChain::child(const FrameBox& region_in_parent, std::string view_id) const {
  FrameChain c = *this;
  FrameBox r = region_in_parent;
  r.frame_id = innermost().view_id;
  c.links.push_back(ChainLink{std::move(r), std::move(view_id)});
  return c;
}

void FrameChain::check() const {
  if (links.empty()) throw err(GeometryError::Kind::chain, "empty frame chain");
  if (links.front().region.frame_id != kGlobalFrameId) {
    throw err(GeometryError::Kind::chain, "frame chain must start at the global frame, got '" +
                                              links.front().region.frame_id + "'");
  }
  if (links.front().region.x_min != 0 || links.front().region.y_min != 0) {
    throw err(GeometryError::Kind::chain, "global frame must sit at the origin");
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    links[i].region.check();
    if (i == 0) continue;
    const auto& parent = links[i - 1];
    if (links[i].region.frame_id != parent.view_id) {
      throw err(GeometryError::Kind::chain, "chain broken at depth " + std::to_string(i) + ": region lives in '" +
                                                links[i].region.frame_id + "' but parent view is '" +
                                                parent.view_id + "'");
    }
    if (!links[i].region.within(parent.region.width, parent.region.height)) {
      throw err(GeometryError::Kind::chain, "chain region at depth " + std::to_string(i) +
                                                " leaves its parent frame");
    }
  }
}

PixelBox FrameChain::global_region() const {
  double x = 0, y = 0;
  for (const auto& l : links) {
    x += l.region.x_min;
    y += l.region.y_min;
  }
  const auto& in = innermost().region;
  return PixelBox{x, y, x + in.width, y + in.height};
}

NormPoint to_relative(const PixelPoint& p, const FrameBox& roi) {
  roi.check();
  if (p.x < roi.x_min || p.x > roi.x_max() || p.y < roi.y_min || p.y > roi.y_max()) {
    std::ostringstream os;
    os << "point (" << p.x << ", " << p.y << ") lies outside roi (" << roi.x_min << ", " << roi.y_min << ", "
       << roi.width << ", " << roi.height << ")";
    throw err(GeometryError::Kind::out_of_frame, os.str());
  }
  return NormPoint{round_relative(p.x, roi.x_min, roi.width), round_relative(p.y, roi.y_min, roi.height)};
}

NormBox box_to_relative(const PixelBox& b, const FrameBox& roi) {
  if (b.x2 < b.x1 || b.y2 < b.y1) {
    throw err(GeometryError::Kind::normalization, "pixel box corners are out of order");
  }
  NormPoint a = to_relative({b.x1, b.y1}, roi);
  NormPoint c = to_relative({b.x2, b.y2}, roi);
  // A collapsed axis is widened by one unit so crops stay nonempty.
  auto widen = [](int& lo, int& hi) {
    if (lo != hi) return;
    if (hi < kRelativeScale) {
      ++hi;
    } else {
      --lo;
    }
  };
  if (b.x2 > b.x1) widen(a.u, c.u);
  if (b.y2 > b.y1) widen(a.v, c.v);
  if (a.u > c.u || a.v > c.v) {
    throw err(GeometryError::Kind::normalization, "corner ordering violated after rounding");
  }
  return NormBox{a.u, a.v, c.u, c.v};
}

PixelPoint to_pixels(const NormPoint& n, const FrameBox& roi) {
  return PixelPoint{roi.x_min + n.u / kScale * roi.width, roi.y_min + n.v / kScale * roi.height};
}

PixelBox to_pixels(const RealBox& n, const FrameBox& roi) {
  return PixelBox{roi.x_min + n.x1 / kScale * roi.width, roi.y_min + n.y1 / kScale * roi.height,
                  roi.x_min + n.x2 / kScale * roi.width, roi.y_min + n.y2 / kScale * roi.height};
}

PixelBox to_pixels(const NormBox& n, const FrameBox& roi) { return to_pixels(to_real(n), roi); }

namespace {

// Innermost-out: relative -> innermost pixels, then shift by each ancestor
// origin below the global link. Result is in global pixels.
PixelBox innermost_to_global_pixels(const RealBox& n, const FrameChain& chain) {
  PixelBox p = to_pixels(n, chain.innermost().region);
  for (std::size_t i = chain.links.size() - 1; i-- > 1;) {
    p.x1 += chain.links[i].region.x_min;
    p.x2 += chain.links[i].region.x_min;
    p.y1 += chain.links[i].region.y_min;
    p.y2 += chain.links[i].region.y_min;
  }
  return p;
}

}  // namespace

RealBox compose_to_global_real(const RealBox& n, const FrameChain& chain) {
  chain.check();
  if (chain.links.size() == 1) return n;
  const PixelBox p = innermost_to_global_pixels(n, chain);
  const auto& g = chain.global_frame();
  return RealBox{(p.x1 - g.x_min) * kScale / g.width, (p.y1 - g.y_min) * kScale / g.height,
                 (p.x2 - g.x_min) * kScale / g.width, (p.y2 - g.y_min) * kScale / g.height};
}

NormBox compose_to_global(const NormBox& n, const FrameChain& chain) {
  chain.check();
  if (chain.links.size() == 1) return n;
  PixelBox p = innermost_to_global_pixels(to_real(n), chain);
  const auto& g = chain.global_frame();
  // Clamp float dust at the frame edge before the single rounding step.
  p.x1 = std::clamp(p.x1, g.x_min, g.x_max());
  p.x2 = std::clamp(p.x2, g.x_min, g.x_max());
  p.y1 = std::clamp(p.y1, g.y_min, g.y_max());
  p.y2 = std::clamp(p.y2, g.y_min, g.y_max());
  return box_to_relative(p, g);
}

RealBox compose_real(const RealBox& local, const RealBox& parent) {
  const double w = parent.x2 - parent.x1;
  const double h = parent.y2 - parent.y1;
  return RealBox{parent.x1 + local.x1 / kScale * w, parent.y1 + local.y1 / kScale * h,
                 parent.x1 + local.x2 / kScale * w, parent.y1 + local.y2 / kScale * h};
}

double intersection_area(const RealBox& a, const RealBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

long long intersection_area(const NormBox& a, const NormBox& b) {
  const long long w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const long long h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0 && h > 0) ? w * h : 0;
}

double iou(const NormBox& a, const NormBox& b) {
  if (a.degenerate() || b.degenerate()) return 0.0;
  const long long inter = intersection_area(a, b);
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double iou(const RealBox& a, const RealBox& b) {
  if (!(a.area() > 0) || !(b.area() > 0)) return 0.0;
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

bool contains(const RealBox& outer, const RealBox& inner, double tol) {
  return inner.x1 >= outer.x1 - tol && inner.y1 >= outer.y1 - tol && inner.x2 <= outer.x2 + tol &&
         inner.y2 <= outer.y2 + tol;
}

}  // namespace zt::geo
