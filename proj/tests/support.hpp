#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.
// Oracles here never call the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "zoomtrace/geometry.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::testing {

using Rng = std::mt19937_64;

inline long long uniform(Rng& rng, long long lo, long long hi) {
  return std::uniform_int_distribution<long long>(lo, hi)(rng);
}
inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// A nondegenerate relative box.
inline geo::NormBox random_box(Rng& rng, int min_side = 1) {
  const int x1 = static_cast<int>(uniform(rng, 0, 1000 - min_side));
  const int y1 = static_cast<int>(uniform(rng, 0, 1000 - min_side));
  const int x2 = static_cast<int>(uniform(rng, x1 + min_side, 1000));
  const int y2 = static_cast<int>(uniform(rng, y1 + min_side, 1000));
  return {x1, y1, x2, y2};
}

// ---- coordinate oracle: plain affine maps, evaluated step by step ----

struct Rect {
  double x, y, w, h;
};

// Pixel rectangle of relative box b inside pixel rectangle r.
inline Rect sub_rect(const Rect& r, const std::array<double, 4>& b) {
  return {r.x + b[0] / 1000.0 * r.w, r.y + b[1] / 1000.0 * r.h, (b[2] - b[0]) / 1000.0 * r.w,
          (b[3] - b[1]) / 1000.0 * r.h};
}

// Relative box in the innermost of `crops` (each relative to the previous
// rectangle, starting from the full image) expressed against the full image.
inline std::array<double, 4> brute_compose(double W, double H, const std::vector<std::array<double, 4>>& crops,
                                           const std::array<double, 4>& local) {
  Rect r{0, 0, W, H};
  for (const auto& c : crops) r = sub_rect(r, c);
  const Rect p = sub_rect(r, local);
  return {p.x / W * 1000.0, p.y / H * 1000.0, (p.x + p.w) / W * 1000.0, (p.y + p.h) / H * 1000.0};
}

// ---- random trajectories ----

inline traj::ChecklistItem random_item(Rng& rng, const std::string& id, int depth) {
  traj::ChecklistItem it;
  it.id = id;
  it.goal = coin(rng) ? "" : "inspect region " + id;
  if (coin(rng, 0.8)) it.roi = random_box(rng);
  it.done = coin(rng);
  if (depth == 0 && coin(rng, 0.3)) {
    const auto n = uniform(rng, 1, 3);
    for (long long k = 0; k < n; ++k) it.children.push_back(random_item(rng, id + "." + std::to_string(k + 1), 1));
  }
  return it;
}

inline traj::Section checklist_section(traj::SectionKind kind, std::vector<traj::ChecklistItem> items) {
  traj::Section s;
  s.kind = kind;
  s.header = traj::section_header(kind);
  s.body = traj::render_checklist(items);
  s.items = std::move(items);
  return s;
}

inline traj::Section obj_section(traj::SectionKind kind, const std::string& lead, std::vector<traj::ObjLine> objs) {
  traj::Section s;
  s.kind = kind;
  s.header = traj::section_header(kind);
  s.body = lead;
  for (const auto& o : objs) s.body += "\n" + traj::render_obj(o);
  s.objs = std::move(objs);
  return s;
}

inline std::vector<traj::ObjLine> random_objs(Rng& rng, int max_n) {
  std::vector<traj::ObjLine> out;
  const auto n = uniform(rng, 0, max_n);
  static const char* labels[] = {"", "ship", "plane", "small vehicle"};
  for (long long i = 0; i < n; ++i) out.push_back({labels[uniform(rng, 0, 3)], random_box(rng)});
  return out;
}

inline traj::ThinkBlock random_think(Rng& rng, bool allow_plan, bool final_turn) {
  std::vector<traj::Section> secs;
  if (coin(rng, 0.6)) {
    traj::Section free;
    free.body = "Reasoning about view " + std::to_string(uniform(rng, 0, 99)) + ".";
    secs.push_back(free);
  }
  if (coin(rng, 0.7)) {
    secs.push_back(obj_section(traj::SectionKind::observation_note, "Visible findings:", random_objs(rng, 3)));
  }
  if (allow_plan && coin(rng, 0.5)) {
    std::vector<traj::ChecklistItem> items;
    const auto n = uniform(rng, 1, 4);
    for (long long i = 0; i < n; ++i) items.push_back(random_item(rng, "q" + std::to_string(i + 1), 0));
    secs.push_back(checklist_section(traj::SectionKind::plan, items));
  } else if (coin(rng, 0.5)) {
    std::vector<traj::ChecklistItem> items;
    const auto n = uniform(rng, 1, 4);
    for (long long i = 0; i < n; ++i) items.push_back(random_item(rng, "q" + std::to_string(i + 1), 0));
    secs.push_back(checklist_section(traj::SectionKind::progress, items));
  }
  if (final_turn && coin(rng, 0.6)) {
    secs.push_back(obj_section(traj::SectionKind::final_aggregation, "Total listed below.", random_objs(rng, 4)));
  }
  if (secs.empty()) {
    traj::Section free;
    free.body = "Nothing notable.";
    secs.push_back(free);
  }
  return traj::ThinkBlock::from_sections(std::move(secs));
}

inline traj::Answer random_answer(Rng& rng, traj::TaskKind task) {
  switch (task) {
    case traj::TaskKind::count: return traj::Answer::count(uniform(rng, 0, 60));
    case traj::TaskKind::grounding: return traj::Answer::box(random_box(rng).literal());
    case traj::TaskKind::choice: return traj::Answer::choice(static_cast<char>('A' + uniform(rng, 0, 3)));
    default: return traj::Answer::free_text(task, "answer " + std::to_string(uniform(rng, 0, 9)));
  }
}

// Valid trajectory: think + tool call + observation turns, then think + answer.
inline traj::Trajectory random_trajectory(Rng& rng, traj::TaskKind task) {
  traj::Trajectory t;
  const auto zooms = uniform(rng, 0, 5);
  int turn = 0;
  int next_view = 1;
  std::vector<std::string> views{"v0"};
  for (long long z = 0; z < zooms; ++z) {
    t.steps.push_back({random_think(rng, z == 0, false), turn});
    traj::ToolCall tc{traj::kZoomToolName, views[uniform(rng, 0, static_cast<long long>(views.size()) - 1)],
                      random_box(rng).literal()};
    t.steps.push_back({tc, turn});
    ++turn;
    const std::string id = "v" + std::to_string(next_view++);
    views.push_back(id);
    t.steps.push_back({traj::Observation::make(id, coin(rng) ? "" : "Region: global pixels [0, 0, 10, 10] of 100x100"),
                       turn});
  }
  t.steps.push_back({random_think(rng, zooms == 0, true), turn});
  t.steps.push_back({random_answer(rng, task), turn});
  return t;
}

}  // namespace zt::testing
