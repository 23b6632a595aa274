#include "zoomtrace/imagetool.hpp"

#include <cmath>
#include <cstdio>

namespace zt::imagetool {

const char* to_string(ToolError::Kind k) {
  switch (k) {
    case ToolError::Kind::unknown_id: return "unknown_id";
    case ToolError::Kind::bad_bbox: return "bad_bbox";
    case ToolError::Kind::zero_area: return "zero_area";
    case ToolError::Kind::budget_exhausted: return "budget_exhausted";
    case ToolError::Kind::depth_exceeded: return "depth_exceeded";
  }
  return "?";
}

std::pair<int, int> fit_pixels(long long width, long long height, std::size_t max_pixels) {
  if (width < 1 || height < 1) throw std::invalid_argument("zero-sized frame");
  if (static_cast<unsigned long long>(width) * static_cast<unsigned long long>(height) <= max_pixels) {
    return {static_cast<int>(width), static_cast<int>(height)};
  }
  const double s = std::sqrt(static_cast<double>(max_pixels) / (static_cast<double>(width) * height));
  long long w = std::max(1LL, static_cast<long long>(std::floor(width * s)));
  long long h = std::max(1LL, static_cast<long long>(std::floor(height * s)));
  while (w * h > static_cast<long long>(max_pixels)) {
    if (w >= h && w > 1) {
      --w;
    } else {
      --h;
    }
  }
  return {static_cast<int>(w), static_cast<int>(h)};
}

std::string View::frame_note() const {
  const auto& g = chain.global_frame();
  char buf[160];
  std::snprintf(buf, sizeof buf, "Region: global pixels [%lld, %lld, %lld, %lld] of %lldx%lld", region.x, region.y,
                region.x2(), region.y2(), static_cast<long long>(g.width), static_cast<long long>(g.height));
  return buf;
}

std::optional<FrameNote> parse_frame_note(const std::string& text) {
  const auto at = text.find("Region: global pixels [");
  if (at == std::string::npos) return std::nullopt;
  long long x1, y1, x2, y2, w, h;
  if (std::sscanf(text.c_str() + at, "Region: global pixels [%lld, %lld, %lld, %lld] of %lldx%lld", &x1, &y1, &x2,
                  &y2, &w, &h) != 6) {
    return std::nullopt;
  }
  return FrameNote{raster::IRect{x1, y1, x2 - x1, y2 - y1}, w, h};
}

raster::IRect crop_region(const raster::IRect& parent, const geo::NormBox& b, long long canvas_w, long long canvas_h) {
  const long long s = geo::kRelativeScale;
  long long x1 = parent.x + b.x1 * parent.w / s;
  long long y1 = parent.y + b.y1 * parent.h / s;
  long long x2 = parent.x + (b.x2 * parent.w + s - 1) / s;
  long long y2 = parent.y + (b.y2 * parent.h + s - 1) / s;
  x1 = std::clamp(x1, 0LL, canvas_w - 1);
  y1 = std::clamp(y1, 0LL, canvas_h - 1);
  x2 = std::clamp(x2, x1 + 1, canvas_w);
  y2 = std::clamp(y2, y1 + 1, canvas_h);
  return raster::IRect{x1, y1, x2 - x1, y2 - y1};
}

Session::Session(std::shared_ptr<const scene::Scene> scene, std::size_t max_pixels, Budget budget, bool render)
    : scene_(std::move(scene)), max_pixels_(max_pixels), budget_(budget), render_(render) {
  if (!scene_) throw std::invalid_argument("session needs a scene");
  if (max_pixels_ < 1) throw std::invalid_argument("max_pixels must be positive");
  View g;
  g.view_id = traj::kGlobalViewId;
  g.chain = geo::FrameChain::global(double(scene_->width()), double(scene_->height()), g.view_id);
  g.region = raster::IRect{0, 0, scene_->width(), scene_->height()};
  g.bbox = geo::kFullFrame.literal();
  std::tie(g.out_width, g.out_height) = fit_pixels(scene_->width(), scene_->height(), max_pixels_);
  if (render_) g.pixels = scene_->render(g.region, g.out_width, g.out_height);
  index_[g.view_id] = 0;
  views_.push_back(std::move(g));
}

const View* Session::find(const std::string& view_id) const {
  auto f = index_.find(view_id);
  return f == index_.end() ? nullptr : &views_[f->second];
}

const View& Session::zoom_in(const std::string& source_image_id, const traj::BoxLiteral& bbox) {
  const View* src = find(source_image_id);
  if (!src) throw ToolError(ToolError::Kind::unknown_id, "unknown source_image_id '" + source_image_id + "'");
  const auto nb = geo::NormBox::try_make(bbox);
  if (!nb) throw ToolError(ToolError::Kind::bad_bbox, "bbox " + traj::format_box(bbox) + " is outside 0-1000");
  if (nb->degenerate()) throw ToolError(ToolError::Kind::zero_area, "bbox " + traj::format_box(bbox) + " has no area");
  if (budget_.used_tool_calls >= budget_.max_tool_calls) {
    throw ToolError(ToolError::Kind::budget_exhausted,
                    "tool budget of " + std::to_string(budget_.max_tool_calls) + " calls is exhausted");
  }
  const int depth = src->depth() + 1;
  if (depth > budget_.max_depth) {
    throw ToolError(ToolError::Kind::depth_exceeded, "zoom depth " + std::to_string(depth) + " exceeds the cap of " +
                                                         std::to_string(budget_.max_depth));
  }

  View v;
  v.view_id = "v" + std::to_string(views_.size());
  v.parent = src->view_id;
  v.bbox = bbox;
  v.level = std::min(geo::next_level(src->level), geo::ZoomLevel::L2);
  v.region = crop_region(src->region, *nb, scene_->width(), scene_->height());
  v.chain = src->chain.child(geo::FrameBox{"", double(v.region.x - src->region.x), double(v.region.y - src->region.y),
                                           double(v.region.w), double(v.region.h)},
                             v.view_id);
  std::tie(v.out_width, v.out_height) = fit_pixels(v.region.w, v.region.h, max_pixels_);
  if (render_) v.pixels = scene_->render(v.region, v.out_width, v.out_height);

  ++budget_.used_tool_calls;
  budget_.deepest = std::max(budget_.deepest, depth);
  index_[v.view_id] = views_.size();
  views_.push_back(std::move(v));
  return views_.back();
}

evidence::FrameMap Session::frames() const { return frames_of(views_); }

evidence::FrameMap frames_of(const std::vector<View>& views) {
  evidence::FrameMap m;
  for (const auto& v : views) m[v.view_id] = v.chain;
  return m;
}

}  // namespace zt::imagetool
