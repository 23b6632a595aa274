#include <algorithm>
#include <random>
#include <sstream>

#include "zoomtrace/backend.hpp"
#include "zoomtrace/evidence.hpp"
#include "zoomtrace/imagetool.hpp"

namespace zt::agent {

namespace {

const char* kQuadrantNames[] = {"top-left", "top-right", "bottom-left", "bottom-right"};

std::string think(const std::string& body) { return "<think>\n" + body + "\n</think>"; }

std::string zoom(const std::string& view, const geo::NormBox& b) {
  return traj::serialize(traj::Step{traj::ToolCall{traj::kZoomToolName, view, b.literal()}, 0});
}

std::string noun(const BackendContext& ctx) { return ctx.target_label.empty() ? "target" : ctx.target_label; }

}  // namespace

const std::vector<geo::NormBox>& HeuristicBackend::quadrants() {
  // Overlap wide enough that any object up to ~11% of the frame lies fully
  // inside at least one quadrant.
  static const std::vector<geo::NormBox> q{
      {0, 0, 560, 560}, {440, 0, 1000, 560}, {0, 440, 560, 1000}, {440, 440, 1000, 1000}};
  return q;
}

void HeuristicBackend::reset(std::uint64_t seed) {
  order_ = {0, 1, 2, 3};
  if (opt_.shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order_.begin(), order_.end(), rng);
  }
  visited_ = 0;
  found_.clear();
}

std::string HeuristicBackend::next_turn(const std::vector<Message>& history, const BackendContext& ctx) {
  const bool any_assistant = std::any_of(history.begin(), history.end(),
                                         [](const Message& m) { return m.role == Message::Role::assistant; });
  if (!any_assistant) return plan_turn(ctx);
  return visit_turn(history, ctx);
}

namespace {

std::vector<traj::ChecklistItem> checklist(std::size_t done_mask) {
  std::vector<traj::ChecklistItem> items;
  const auto& q = HeuristicBackend::quadrants();
  for (std::size_t i = 0; i < q.size(); ++i) {
    traj::ChecklistItem it;
    it.id = "q" + std::to_string(i + 1);
    it.goal = std::string("sweep ") + kQuadrantNames[i] + " quadrant";
    it.roi = q[i];
    it.done = (done_mask >> i) & 1U;
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace

std::string HeuristicBackend::plan_turn(const BackendContext& ctx) {
  std::ostringstream os;
  os << "[Observation]\nGlobal view only; " << noun(ctx)
     << " objects are too small to trust here, so every quadrant gets a closer look.\n";
  os << "[PLAN]\n" << traj::render_checklist(checklist(0));
  return think(os.str()) + "\n" + zoom(traj::kGlobalViewId, quadrants()[order_[0]]);
}

std::string HeuristicBackend::visit_turn(const std::vector<Message>& history, const BackendContext& ctx) {
  const Message* obs = nullptr;
  for (auto it = history.rbegin(); it != history.rend() && !obs; ++it) {
    if (it->role == Message::Role::tool) obs = &*it;
  }
  std::vector<Found> here;
  std::ostringstream os;
  const raster::Image* img = obs ? ctx.image(obs->image_view) : nullptr;
  const auto note = obs ? imagetool::parse_frame_note(obs->text) : std::nullopt;

  if (img && note) {
    std::map<raster::Rgb, std::string> wanted;
    for (const auto& [label, c] : ctx.palette) {
      if (ctx.target_label.empty() || label == ctx.target_label) wanted[c] = label;
    }
    std::vector<raster::Rgb> colors;
    for (const auto& [c, l] : wanted) colors.push_back(c);
    const auto chain = geo::FrameChain::global(double(note->canvas_width), double(note->canvas_height))
                           .child(geo::FrameBox{"", double(note->region.x), double(note->region.y),
                                                double(note->region.w), double(note->region.h)},
                                  obs->image_view);
    const geo::FrameBox crop{"", 0, 0, double(img->width), double(img->height)};
    for (const auto& c : raster::components(*img, colors)) {
      // Objects cut by an inner crop edge belong to a neighbouring crop.
      if ((c.x1 == 0 && note->region.x > 0) || (c.y1 == 0 && note->region.y > 0) ||
          (c.x2 == img->width && note->region.x2() < note->canvas_width) ||
          (c.y2 == img->height && note->region.y2() < note->canvas_height)) {
        continue;
      }
      const auto local = geo::box_to_relative(geo::PixelBox{double(c.x1), double(c.y1), double(c.x2), double(c.y2)}, crop);
      here.push_back(Found{wanted[c.color], local, geo::compose_to_global(local, chain), obs->image_view});
    }
  }
  // Component order is by colour then position; present them top-to-bottom.
  std::stable_sort(here.begin(), here.end(), [](const Found& a, const Found& b) {
    return std::tie(a.local.y1, a.local.x1) < std::tie(b.local.y1, b.local.x1);
  });

  const std::string view = obs ? obs->image_view : "?";
  os << "[Observation]\nCrop " << view << " shows " << here.size() << ' ' << noun(ctx) << " object(s).";
  for (const auto& f : here) os << '\n' << traj::render_obj(traj::ObjLine{f.label, f.local});
  found_.insert(found_.end(), here.begin(), here.end());
  ++visited_;

  std::size_t mask = 0;
  for (std::size_t i = 0; i < visited_ && i < order_.size(); ++i) mask |= std::size_t{1} << order_[i];
  os << "\n[PROGRESS]\n" << traj::render_checklist(checklist(mask));

  if (visited_ < order_.size()) {
    return think(os.str()) + "\n" + zoom(traj::kGlobalViewId, quadrants()[order_[visited_]]);
  }

  evidence::EvidenceStore store;
  for (const auto& f : found_) {
    store.entries.push_back(evidence::EvidenceEntry{f.global, f.label, evidence::Status::verified, 0, 1, f.view_id, ""});
  }
  if (opt_.dedup) store = evidence::dedup(std::move(store), opt_.dedup_iou);

  os << "\n[FINAL AGGREGATION]";
  if (store.entries.empty()) os << "\nNo " << noun(ctx) << " objects in any quadrant.";
  for (const auto& e : store.entries) os << '\n' << traj::render_obj(traj::ObjLine{e.label, e.global_box});
  os << "\nTotal: " << store.entries.size();

  std::string answer;
  switch (ctx.task) {
    case traj::TaskKind::grounding: {
      // Largest finding, or the whole frame when nothing was seen.
      geo::NormBox best = geo::kFullFrame;
      long long area = -1;
      for (const auto& e : store.entries) {
        if (e.global_box.area() > area) {
          area = e.global_box.area();
          best = e.global_box;
        }
      }
      answer = traj::format_box(best.literal());
      break;
    }
    case traj::TaskKind::choice: answer = "A"; break;
    case traj::TaskKind::count: answer = std::to_string(store.entries.size()); break;
    default: answer = std::to_string(store.entries.size()); break;
  }
  return think(os.str()) + "\n<answer>" + answer + "</answer>";
}

}  // namespace zt::agent
