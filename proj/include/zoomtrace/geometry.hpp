#pragma once

// Scale-invariant coordinates: pixel frames, the discrete 0-1000 relative
// frame, nested-crop composition and box algebra.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace zt::geo {

inline constexpr int kRelativeScale = 1000;

struct GeometryError : public std::runtime_error {
  enum class Kind { out_of_frame, normalization, chain, invalid_box };
  Kind kind;
  GeometryError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

enum class ZoomLevel { L0 = 0, L1 = 1, L2 = 2 };

const char* to_string(ZoomLevel level);
ZoomLevel next_level(ZoomLevel level);

struct PixelPoint {
  double x = 0;
  double y = 0;
  bool operator==(const PixelPoint&) const = default;
};

// Corner form (x1, y1, x2, y2) in some pixel frame.
struct PixelBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  bool operator==(const PixelBox&) const = default;
};

// ROI (x_min, y_min, w, h) inside the pixel frame named by frame_id.
struct FrameBox {
  std::string frame_id;
  double x_min = 0;
  double y_min = 0;
  double width = 1;
  double height = 1;

  double x_max() const { return x_min + width; }
  double y_max() const { return y_min + height; }
  bool operator==(const FrameBox&) const = default;

  // Throws invalid_box unless width, height > 0 and origin is nonnegative.
  void check() const;
  // True when the box lies inside a frame of the given extent.
  bool within(double frame_width, double frame_height, double tol = 1e-9) const;
};

struct NormPoint {
  int u = 0;
  int v = 0;
  bool operator==(const NormPoint&) const = default;
};

struct NormBox {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  static bool valid(long long x1, long long y1, long long x2, long long y2);
  // Validating constructor, throws invalid_box.
  static NormBox make(long long x1, long long y1, long long x2, long long y2);
  static std::optional<NormBox> try_make(const std::array<long long, 4>& c);

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool degenerate() const { return x1 == x2 || y1 == y2; }
  std::array<long long, 4> literal() const { return {x1, y1, x2, y2}; }

  auto operator<=>(const NormBox&) const = default;
};

inline constexpr NormBox kFullFrame{0, 0, kRelativeScale, kRelativeScale};

std::string to_string(const NormBox& b);

// Continuous box in relative units; used where rounding is deferred.
struct RealBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double area() const { return (x2 - x1) * (y2 - y1); }
  bool operator==(const RealBox&) const = default;
};

RealBox to_real(const NormBox& b);

// One level of a crop chain: `region` lives in the frame of the previous
// link's view (or the raw image for the first link), and viewing it yields
// `view_id`.
struct ChainLink {
  FrameBox region;
  std::string view_id;
  bool operator==(const ChainLink&) const = default;
};

inline constexpr const char* kGlobalFrameId = "global";

struct FrameChain {
  std::vector<ChainLink> links;

  static FrameChain global(double width, double height, std::string view_id = "v0");
  FrameChain child(const FrameBox& region_in_parent, std::string view_id) const;

  std::size_t depth() const { return links.empty() ? 0 : links.size() - 1; }
  const ChainLink& innermost() const { return links.back(); }
  const FrameBox& global_frame() const { return links.front().region; }

  // Throws chain errors on frame_id mismatches or out-of-parent regions.
  void check() const;
  // Innermost view expressed in global pixel coordinates (continuous).
  PixelBox global_region() const;

  bool operator==(const FrameChain&) const = default;
};

// Forward transform, rounding half away from zero.
NormPoint to_relative(const PixelPoint& p, const FrameBox& roi);
NormBox box_to_relative(const PixelBox& b, const FrameBox& roi);

// Continuous inverse, no rounding.
PixelPoint to_pixels(const NormPoint& n, const FrameBox& roi);
PixelBox to_pixels(const NormBox& n, const FrameBox& roi);
PixelBox to_pixels(const RealBox& n, const FrameBox& roi);

// Maps a box relative to the innermost view back to the global relative frame,
// rounding once at the end.
NormBox compose_to_global(const NormBox& n, const FrameChain& chain);
// Same mapping without the final rounding.
RealBox compose_to_global_real(const RealBox& n, const FrameChain& chain);

// Relative box of `inner` (global relative units) re-expressed against an
// enclosing global relative region.
RealBox compose_real(const RealBox& local, const RealBox& parent_region);

double intersection_area(const RealBox& a, const RealBox& b);
long long intersection_area(const NormBox& a, const NormBox& b);

// Half-open IoU; zero-area boxes score 0 against everything.
double iou(const NormBox& a, const NormBox& b);
double iou(const RealBox& a, const RealBox& b);

bool contains(const RealBox& outer, const RealBox& inner, double tol = 0.0);

}  // namespace zt::geo
