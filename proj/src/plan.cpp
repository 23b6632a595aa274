#include "zoomtrace/plan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace zt::plan {

namespace {

struct Applier {
  PlanState& s;

  void violate(ViolationKind k, std::string detail) { s.violations.push_back(Violation{k, std::move(detail)}); }

  bool covers(const geo::RealBox& inspected, const PlanItem& item) const {
    if (!item.global_roi) return false;
    const double area = item.global_roi->area();
    if (!(area > 0)) return false;
    return geo::intersection_area(inspected, *item.global_roi) / area >= s.config.coverage_threshold;
  }

  void add_item(const ItemSpec& spec, int depth, const std::string& parent) {
    PlanItem it;
    it.id = spec.id;
    it.goal = spec.goal;
    it.roi = spec.roi;
    it.global_roi = spec.global_roi;
    it.frame_view = spec.frame_view;
    it.depth = depth;
    it.parent = parent;
    it.created_seq = static_cast<int>(s.inspections.size());
    if (spec.roi && *spec.roi == geo::kFullFrame) s.flags.push_back("item '" + spec.id + "' uses the full-frame roi");
    s.order.push_back(spec.id);
    s.items.emplace(spec.id, std::move(it));
  }

  // Items without an roi count as covered by any inspection after they were added.
  bool covered_now(const PlanItem& it) const {
    if (it.global_roi) return it.covered;
    return static_cast<int>(s.inspections.size()) > it.created_seq;
  }

  void maybe_autocomplete(const std::string& parent_id) {
    if (parent_id.empty()) return;
    auto p = s.items.find(parent_id);
    if (p == s.items.end() || p->second.status != Status::expanded) return;
    for (const auto& id : s.order) {
      const auto& c = s.items.at(id);
      if (c.parent == parent_id && c.status != Status::completed) return;
    }
    p->second.status = Status::completed;
    s.event_log.push_back(LogEntry{ev::Complete{parent_id}, true});
    maybe_autocomplete(p->second.parent);
  }

  void operator()(const ev::Init& e) {
    if (s.initialized) {
      violate(ViolationKind::illegal_transition, "plan initialized twice");
      return;
    }
    s.initialized = true;
    if (e.items.size() > s.config.max_items) {
      violate(ViolationKind::plan_too_large, std::to_string(e.items.size()) + " items exceed K=" +
                                                 std::to_string(s.config.max_items));
    }
    for (const auto& spec : e.items) {
      if (s.items.count(spec.id)) {
        violate(ViolationKind::illegal_transition, "duplicate item id '" + spec.id + "'");
        continue;
      }
      add_item(spec, 0, "");
    }
  }

  void operator()(const ev::Inspect& e) {
    s.inspections.push_back(e.region);
    for (auto& [id, it] : s.items) {
      if (covers(e.region, it)) it.covered = true;
    }
  }

  void operator()(const ev::Complete& e) {
    auto f = s.items.find(e.id);
    if (f == s.items.end()) {
      violate(ViolationKind::unknown_id, "complete on unknown item '" + e.id + "'");
      return;
    }
    auto& it = f->second;
    if (it.status == Status::completed) {
      violate(ViolationKind::recomplete, "item '" + e.id + "' completed twice");
      return;
    }
    if (it.status == Status::expanded) {
      violate(ViolationKind::illegal_transition, "item '" + e.id + "' is expanded; it completes with its children");
      return;
    }
    it.bypassed = !covered_now(it);
    it.status = Status::completed;
    maybe_autocomplete(it.parent);
  }

  void operator()(const ev::Expand& e) {
    auto f = s.items.find(e.id);
    if (f == s.items.end()) {
      violate(ViolationKind::unknown_id, "expand on unknown item '" + e.id + "'");
      return;
    }
    if (e.children.empty()) {
      violate(ViolationKind::illegal_transition, "expand of '" + e.id + "' without children");
      return;
    }
    auto& it = f->second;
    const int depth = it.depth + 1;
    if (depth > s.config.max_child_depth) {
      violate(ViolationKind::depth_breach, "expanding '" + e.id + "' would create depth " + std::to_string(depth));
      return;
    }
    if (it.status != Status::pending && it.status != Status::expanded) {
      violate(ViolationKind::illegal_transition, "expand of non-pending item '" + e.id + "'");
      return;
    }
    it.status = Status::expanded;
    const std::string parent = it.id;
    for (const auto& c : e.children) {
      if (s.items.count(c.id)) {
        violate(ViolationKind::illegal_transition, "duplicate item id '" + c.id + "'");
        continue;
      }
      add_item(c, depth, parent);
    }
  }

  void operator()(const ev::Answer& e) {
    if (s.answered) {
      violate(ViolationKind::illegal_transition, "answered twice");
      return;
    }
    s.answered = true;
    if (!e.aggregation_claim) return;
    for (const auto& id : s.order) {
      const auto& it = s.items.at(id);
      if (it.status == Status::completed && it.bypassed && !covered_now(it)) {
        violate(ViolationKind::uninspected_aggregation,
                "aggregation claims item '" + id + "' whose region was never inspected");
      }
    }
  }

  void operator()(const ev::UnknownListing& e) {
    violate(ViolationKind::unlisted_item, "progress lists '" + e.id + "', which is not in the plan");
  }

  void operator()(const ev::Reopen& e) {
    violate(ViolationKind::reopened, "progress un-checks completed item '" + e.id + "'");
  }
};

ItemSpec spec_of(const traj::ChecklistItem& c, const std::string& frame_view, const traj::ViewMap& views) {
  ItemSpec s;
  s.id = c.id;
  s.goal = c.goal;
  s.roi = c.roi;
  s.frame_view = frame_view;
  if (c.roi) {
    auto v = views.find(frame_view);
    if (v != views.end()) s.global_roi = geo::compose_real(geo::to_real(*c.roi), v->second.region);
  }
  return s;
}

// Turns one progress listing into events against the state it will meet.
void progress_events(const std::vector<traj::ChecklistItem>& listed, const std::string& parent,
                     const std::string& frame_view, const traj::ViewMap& views, const PlanState& state,
                     std::vector<Event>& out) {
  std::vector<ItemSpec> fresh;
  for (const auto& c : listed) {
    if (!state.items.count(c.id)) {
      if (parent.empty()) {
        out.push_back(ev::UnknownListing{c.id});
        // Sub-items under it read as an expand of an id the plan never had.
        if (!c.children.empty()) out.push_back(ev::Expand{c.id, item_specs(c.children, frame_view, views)});
      } else {
        fresh.push_back(spec_of(c, frame_view, views));
      }
    }
  }
  if (!fresh.empty()) out.push_back(ev::Expand{parent, fresh});
}

bool has_children(const PlanState& s, const std::string& id) {
  return std::any_of(s.items.begin(), s.items.end(), [&](const auto& kv) { return kv.second.parent == id; });
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::pending: return "pending";
    case Status::completed: return "completed";
    case Status::expanded: return "expanded";
  }
  return "?";
}

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::unknown_id: return "unknown_id";
    case ViolationKind::recomplete: return "recomplete";
    case ViolationKind::depth_breach: return "depth_breach";
    case ViolationKind::illegal_transition: return "illegal_transition";
    case ViolationKind::unlisted_item: return "unlisted_item";
    case ViolationKind::reopened: return "reopened";
    case ViolationKind::uninspected_aggregation: return "uninspected_aggregation";
    case ViolationKind::plan_too_large: return "plan_too_large";
  }
  return "?";
}

std::string describe(const Event& e) {
  struct V {
    std::string operator()(const ev::Init& x) const { return "init(" + std::to_string(x.items.size()) + " items)"; }
    std::string operator()(const ev::Inspect& x) const { return "inspect(" + x.view_id + ")"; }
    std::string operator()(const ev::Complete& x) const { return "complete(" + x.id + ")"; }
    std::string operator()(const ev::Expand& x) const {
      return "expand(" + x.id + ", " + std::to_string(x.children.size()) + " children)";
    }
    std::string operator()(const ev::Answer& x) const {
      return x.aggregation_claim ? "answer(aggregated)" : "answer";
    }
    std::string operator()(const ev::UnknownListing& x) const { return "listing(" + x.id + ")"; }
    std::string operator()(const ev::Reopen& x) const { return "reopen(" + x.id + ")"; }
  };
  return std::visit(V{}, e);
}

std::size_t PlanState::pending_count() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const auto& kv) {
    return kv.second.status == Status::pending;
  }));
}

PlanState apply_event(PlanState s, const Event& e) {
  s.event_log.push_back(LogEntry{e, false});
  std::visit(Applier{s}, e);
  return s;
}

PlanState init_plan(const std::vector<ItemSpec>& items, const PlanConfig& config) {
  if (items.empty()) throw PlanError("plan has no items");
  if (items.size() > config.max_items) {
    throw PlanError("plan has " + std::to_string(items.size()) + " items; K is " + std::to_string(config.max_items));
  }
  PlanState s;
  s.config = config;
  return apply_event(std::move(s), ev::Init{items});
}

PlanState replay(const std::vector<LogEntry>& log, const PlanConfig& config) {
  PlanState s;
  s.config = config;
  for (const auto& entry : log) {
    if (!entry.derived) s = apply_event(std::move(s), entry.event);
  }
  return s;
}

std::vector<ItemSpec> item_specs(const std::vector<traj::ChecklistItem>& items, const std::string& frame_view,
                                 const traj::ViewMap& views) {
  std::vector<ItemSpec> out;
  for (const auto& c : items) out.push_back(spec_of(c, frame_view, views));
  return out;
}

std::vector<Event> events_from(const traj::Trajectory& t, const traj::ViewMap& views, const PlanConfig& config) {
  std::vector<Event> events;
  // A shadow state tells listing handling which ids already exist.
  PlanState shadow;
  shadow.config = config;
  auto emit = [&](Event e) {
    shadow = apply_event(std::move(shadow), e);
    events.push_back(std::move(e));
  };

  bool claimed = false;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& step = t.steps[i];
    if (auto think = step.as<traj::ThinkBlock>()) {
      const auto view = traj::current_view_at(t, i);
      for (const auto& sec : think->sections) {
        if (sec.kind == traj::SectionKind::plan && !sec.items.empty()) {
          // A repeated plan replays as a second init, which is illegal.
          const bool first = !shadow.initialized;
          std::vector<ItemSpec> top;
          for (const auto& c : sec.items) top.push_back(spec_of(c, view, views));
          emit(ev::Init{top});
          if (!first) continue;
          std::function<void(const std::vector<traj::ChecklistItem>&)> nest = [&](const auto& list) {
            for (const auto& c : list) {
              if (c.children.empty() || !shadow.items.count(c.id)) continue;
              emit(ev::Expand{c.id, item_specs(c.children, view, views)});
              nest(c.children);
            }
          };
          nest(sec.items);
        } else if (sec.kind == traj::SectionKind::progress && shadow.initialized) {
          // Structure first, breadth-first so parents exist before children.
          std::vector<std::pair<const std::vector<traj::ChecklistItem>*, std::string>> level{{&sec.items, ""}};
          while (!level.empty()) {
            std::vector<std::pair<const std::vector<traj::ChecklistItem>*, std::string>> next;
            for (const auto& [list, parent] : level) {
              std::vector<Event> pe;
              progress_events(*list, parent, view, views, shadow, pe);
              for (auto& e : pe) emit(std::move(e));
              for (const auto& c : *list) {
                if (shadow.items.count(c.id) && !c.children.empty()) next.emplace_back(&c.children, c.id);
              }
            }
            level = std::move(next);
          }
          // Then marks, children before parents. A parent's own box is
          // informational: its status follows its children.
          // A leaf marked done twice in one listing completes twice.
          std::set<std::string> marked;
          std::function<void(const std::vector<traj::ChecklistItem>&)> marks = [&](const auto& list) {
            for (const auto& c : list) {
              auto f = shadow.items.find(c.id);
              if (f == shadow.items.end()) continue;
              marks(c.children);
              if (has_children(shadow, c.id)) continue;
              const auto st = shadow.items.at(c.id).status;
              if (c.done && !marked.insert(c.id).second) {
                emit(ev::Complete{c.id});
              } else if (c.done && st == Status::pending) {
                emit(ev::Complete{c.id});
              } else if (!c.done && st == Status::completed) {
                emit(ev::Reopen{c.id});
              }
            }
          };
          marks(sec.items);
        } else if (sec.kind == traj::SectionKind::final_aggregation) {
          claimed = true;
        }
      }
    } else if (auto tc = step.as<traj::ToolCall>()) {
      auto src = views.find(tc->source_image_id);
      auto nb = geo::NormBox::try_make(tc->bbox);
      if (src != views.end() && nb) {
        emit(ev::Inspect{geo::compose_real(geo::to_real(*nb), src->second.region), tc->source_image_id});
      }
    } else if (step.as<traj::Answer>()) {
      emit(ev::Answer{claimed});
    }
  }
  return events;
}

QPlanReport evaluate_qplan(const traj::Trajectory& t, traj::TaskKind task, const PlanConfig& config) {
  return evaluate_qplan(t, task, traj::derive_views(t), config);
}

QPlanReport evaluate_qplan(const traj::Trajectory& t, traj::TaskKind task, const traj::ViewMap& views,
                           const PlanConfig& config) {
  QPlanReport rep;
  rep.events = events_from(t, views, config);
  PlanState s;
  s.config = config;
  for (const auto& e : rep.events) s = apply_event(std::move(s), e);
  rep.had_plan = s.initialized;
  rep.violations = s.violations;

  if (!rep.violations.empty()) {
    rep.value = QPlan::violation;
  } else {
    if (s.answered && s.pending_count() > 0) {
      rep.bypass_reasons.push_back("answered with " + std::to_string(s.pending_count()) + " pending item(s)");
    }
    for (const auto& id : s.order) {
      if (s.items.at(id).bypassed) rep.bypass_reasons.push_back("item '" + id + "' completed without inspection");
    }
    if (!s.initialized && task == traj::TaskKind::count && t.tool_call_count() > 0) {
      rep.bypass_reasons.push_back("zooming counting trajectory has no plan");
    }
    if (!s.answered) rep.bypass_reasons.push_back("no answer");
    rep.value = rep.bypass_reasons.empty() ? QPlan::valid : QPlan::bypass;
  }
  rep.state = std::move(s);
  return rep;
}

double difficulty_count(long long gt_count, double lambda_c) {
  const double d = 1.0 - std::exp(-lambda_c * static_cast<double>(gt_count));
  return std::clamp(d, kMinDifficulty, 1.0);
}

double difficulty_grounding(const geo::NormBox& gt_box, double lambda_g) {
  const double d = std::exp(-lambda_g * static_cast<double>(gt_box.area()) / 1e6);
  return std::clamp(d, kMinDifficulty, 1.0);
}

}  // namespace zt::plan
