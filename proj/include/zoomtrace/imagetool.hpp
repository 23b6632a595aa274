#pragma once

// The zoom_in tool: global view, crops re-extracted from the original scene,
// the per-episode view registry and budget enforcement.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zoomtrace/evidence.hpp"
#include "zoomtrace/geometry.hpp"
#include "zoomtrace/raster.hpp"
#include "zoomtrace/scene.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::imagetool {

inline constexpr std::size_t kDefaultMaxPixels = 1003520;
inline constexpr int kDefaultMaxToolCalls = 17;
inline constexpr int kDefaultMaxDepth = 2;

struct ToolError : public std::runtime_error {
  enum class Kind { unknown_id, bad_bbox, zero_area, budget_exhausted, depth_exceeded };
  Kind kind;
  ToolError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

const char* to_string(ToolError::Kind k);

struct Budget {
  int max_tool_calls = kDefaultMaxToolCalls;
  int max_depth = kDefaultMaxDepth;  // zoom layers below the global view
  int used_tool_calls = 0;
  int deepest = 0;
  bool operator==(const Budget&) const = default;
};

// Largest size with w*h <= max_pixels and the same aspect; never upscales.
std::pair<int, int> fit_pixels(long long width, long long height, std::size_t max_pixels);

struct View {
  std::string view_id;
  std::string parent;  // empty for the global view
  geo::FrameChain chain;
  raster::IRect region;  // global pixels, integer
  traj::BoxLiteral bbox{};  // request relative to the parent view
  geo::ZoomLevel level = geo::ZoomLevel::L0;
  int out_width = 0;
  int out_height = 0;
  raster::Image pixels;  // empty when rendering is disabled

  int depth() const { return static_cast<int>(chain.depth()); }
  std::string frame_note() const;
};

// Parses a frame note back into the view's global pixel region and the
// canvas size.
struct FrameNote {
  raster::IRect region;
  long long canvas_width = 0;
  long long canvas_height = 0;
};
std::optional<FrameNote> parse_frame_note(const std::string& text);

// Global pixel region covered by a relative box of the parent region,
// rounded outward and clamped to the canvas.
raster::IRect crop_region(const raster::IRect& parent, const geo::NormBox& bbox, long long canvas_w,
                          long long canvas_h);

class Session {
 public:
  Session(std::shared_ptr<const scene::Scene> scene, std::size_t max_pixels = kDefaultMaxPixels,
          Budget budget = {}, bool render = true);

  const View& global() const { return views_.front(); }
  // Throws ToolError; a failed call uses no budget.
  const View& zoom_in(const std::string& source_image_id, const traj::BoxLiteral& bbox);

  const View* find(const std::string& view_id) const;
  const std::vector<View>& views() const { return views_; }
  const Budget& budget() const { return budget_; }
  const scene::Scene& scene() const { return *scene_; }
  std::size_t max_pixels() const { return max_pixels_; }
  evidence::FrameMap frames() const;

 private:
  std::shared_ptr<const scene::Scene> scene_;
  std::size_t max_pixels_;
  Budget budget_;
  bool render_;
  std::vector<View> views_;
  std::map<std::string, std::size_t> index_;
};

// Frame chains rebuilt from views alone.
evidence::FrameMap frames_of(const std::vector<View>& views);

}  // namespace zt::imagetool
