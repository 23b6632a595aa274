#include "zoomtrace/evidence.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace zt::evidence {

namespace {

bool labels_match(const std::string& a, const std::string& b) { return a.empty() || b.empty() || a == b; }

// Winner of a merge: the deeper observation, then the smaller box.
const EvidenceEntry& finer(const EvidenceEntry& a, const EvidenceEntry& b) {
  if (a.depth != b.depth) return a.depth > b.depth ? a : b;
  return b.global_box < a.global_box ? b : a;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::verified: return "verified";
    case Status::rejected: return "rejected";
    case Status::unresolved: return "unresolved";
  }
  return "?";
}

EvidenceStore ingest(const traj::Trajectory& t, const FrameMap& frames, const IngestOptions& options) {
  EvidenceStore store;
  std::vector<std::string> missing;
  std::vector<EvidenceEntry> aggregated;
  const auto global = frames.find(traj::kGlobalViewId);

  for (const auto& ref : traj::extract_obj_boxes(t)) {
    const bool agg = ref.aggregation();
    const std::string view = (agg || options.local_frame == ObjFrame::global)
                                 ? std::string(traj::kGlobalViewId)
                                 : traj::current_view_at(t, ref.step_index);
    auto f = agg ? global : frames.find(view);
    if (f == frames.end()) {
      missing.push_back("turn " + std::to_string(ref.turn_index) + ": * Obj" +
                        (ref.label.empty() ? "" : " (" + ref.label + ")") + ": " + geo::to_string(ref.box) +
                        " in unknown view '" + view + "'");
      continue;
    }
    EvidenceEntry e;
    e.global_box = geo::compose_to_global(ref.box, f->second);
    e.label = ref.label;
    e.source_turn = ref.turn_index;
    e.depth = agg ? 0 : static_cast<int>(f->second.depth());
    e.view_id = view;
    e.note = std::string(traj::to_string(ref.section)) + " " + geo::to_string(ref.box);
    if (agg) {
      e.status = Status::unresolved;
      aggregated.push_back(std::move(e));
    } else {
      store.entries.push_back(std::move(e));
    }
  }
  if (!missing.empty()) {
    throw IngestError(std::to_string(missing.size()) + " Obj line(s) refer to views without a frame chain",
                      std::move(missing));
  }

  // Aggregation lines that restate a local finding add nothing.
  const std::size_t local_count = store.entries.size();
  for (auto& a : aggregated) {
    bool restated = false;
    for (std::size_t i = 0; i < local_count && !restated; ++i) {
      const auto& l = store.entries[i];
      restated = labels_match(l.label, a.label) && geo::iou(l.global_box, a.global_box) >= options.restate_iou;
    }
    if (!restated) store.entries.push_back(std::move(a));
  }
  return store;
}

EvidenceStore dedup(EvidenceStore s, double tau) {
  for (bool merged = true; merged;) {
    merged = false;
    std::vector<EvidenceEntry> kept;
    kept.reserve(s.entries.size());
    for (auto& e : s.entries) {
      if (e.status != Status::verified) {
        kept.push_back(std::move(e));
        continue;
      }
      std::size_t best = kept.size();
      double best_iou = tau;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        if (kept[k].status != Status::verified || kept[k].label != e.label) continue;
        const double v = geo::iou(kept[k].global_box, e.global_box);
        if (v > best_iou) {
          best_iou = v;
          best = k;
        }
      }
      if (best == kept.size()) {
        kept.push_back(std::move(e));
        continue;
      }
      auto& k = kept[best];
      const auto& win = finer(k, e);
      MergeRecord rec{e.label, k.global_box, e.global_box, win.global_box, best_iou, k.source_turn, e.source_turn};
      k.global_box = win.global_box;
      k.depth = std::max(k.depth, e.depth);
      k.source_turn = std::max(k.source_turn, e.source_turn);
      s.dedup_log.push_back(rec);
      merged = true;
    }
    s.entries = std::move(kept);
  }
  return s;
}

long long Summary::count_for(const std::string& label) const {
  if (label.empty()) return total_verified;
  auto f = counts.find(label);
  return f == counts.end() ? 0 : f->second;
}

Aggregate aggregate(const EvidenceStore& s, const plan::PlanState& plan) {
  Aggregate out;
  auto& nodes = out.tree.nodes;
  nodes[kRootNode] = TreeNode{kRootNode, "", {}, {}};
  for (const auto& id : plan.order) {
    const auto& it = plan.items.at(id);
    nodes[id] = TreeNode{id, it.parent, {}, {}};
  }
  for (const auto& id : plan.order) nodes[plan.items.at(id).parent].children.push_back(id);

  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    const auto& e = s.entries[i];
    const auto box = geo::to_real(e.global_box);
    std::string target = kRootNode;
    double best = 0;
    int best_depth = -1;
    for (const auto& id : plan.order) {
      const auto& it = plan.items.at(id);
      if (!it.global_roi) continue;
      const double a = geo::intersection_area(box, *it.global_roi);
      if (a <= 0) continue;
      if (a > best || (a == best && it.depth > best_depth)) {
        best = a;
        best_depth = it.depth;
        target = id;
      }
    }
    nodes[target].entries.push_back(i);

    if (e.status == Status::unresolved) out.summary.unresolved.push_back(i);
    if (e.status != Status::verified) continue;
    ++out.summary.counts[e.label];
    ++out.summary.total_verified;
  }

  // Best box per label: deepest verified entry, ties to the latest turn.
  std::map<std::string, const EvidenceEntry*> best;
  for (const auto& e : s.entries) {
    if (e.status != Status::verified) continue;
    auto& b = best[e.label];
    if (!b || e.depth > b->depth || (e.depth == b->depth && e.source_turn >= b->source_turn)) b = &e;
  }
  for (const auto& [label, e] : best) out.summary.best_box[label] = e->global_box;
  return out;
}

ConsistencyReport consistency(const traj::Answer& answer, const Summary& summary, const std::string& label) {
  ConsistencyReport r;
  if (answer.kind == traj::TaskKind::count) {
    const auto* n = std::get_if<long long>(&answer.payload);
    if (!n) {
      r.detail = "count answer without an integer payload";
      return r;
    }
    const long long have = summary.count_for(label);
    r.delta = *n - have;
    r.consistent = r.delta == 0;
    r.detail = "answer " + std::to_string(*n) + " vs evidence " + std::to_string(have);
    return r;
  }
  if (answer.kind == traj::TaskKind::grounding) {
    const auto* b = std::get_if<traj::BoxLiteral>(&answer.payload);
    auto nb = b ? geo::NormBox::try_make(*b) : std::nullopt;
    std::optional<geo::NormBox> best;
    if (label.empty()) {
      if (summary.best_box.size() == 1) best = summary.best_box.begin()->second;
    } else if (auto f = summary.best_box.find(label); f != summary.best_box.end()) {
      best = f->second;
    }
    if (!nb || !best) {
      r.detail = !nb ? "grounding answer is not a valid box" : "no verified evidence box to compare against";
      return r;
    }
    r.iou = geo::iou(*nb, *best);
    r.consistent = r.iou >= 0.5;
    std::ostringstream os;
    os << "iou " << r.iou << " against " << geo::to_string(*best);
    r.detail = os.str();
    return r;
  }
  r.applicable = false;
  r.consistent = true;
  r.detail = std::string("not checked for ") + traj::to_string(answer.kind) + " answers";
  return r;
}

std::vector<geo::NormBox> verified_boxes(const EvidenceStore& s, const std::string& label) {
  std::vector<geo::NormBox> out;
  for (const auto& e : s.entries) {
    if (e.status == Status::verified && (label.empty() || e.label == label)) out.push_back(e.global_box);
  }
  return out;
}

std::string render_report(const EvidenceStore& s, const Aggregate& agg, const plan::PlanState& plan) {
  std::ostringstream os;
  std::function<void(const std::string&, int)> walk = [&](const std::string& id, int indent) {
    const auto& node = agg.tree.nodes.at(id);
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (id == kRootNode) {
      os << pad << "root\n";
    } else {
      const auto& it = plan.items.at(id);
      os << pad << id << " [" << plan::to_string(it.status) << "]";
      if (it.roi) os << " roi " << geo::to_string(*it.roi) << " in " << it.frame_view;
      if (!it.goal.empty()) os << " : " << it.goal;
      os << "\n";
    }
    for (auto i : node.entries) {
      const auto& e = s.entries[i];
      os << pad << "  - " << to_string(e.status) << " " << (e.label.empty() ? "object" : e.label) << " "
         << geo::to_string(e.global_box) << " turn " << e.source_turn << " depth " << e.depth << "\n";
    }
    for (const auto& c : node.children) walk(c, indent + 1);
  };
  walk(kRootNode, 0);
  os << "counts:";
  if (agg.summary.counts.empty()) os << " none";
  for (const auto& [label, n] : agg.summary.counts) os << " " << (label.empty() ? "object" : label) << "=" << n;
  os << "\nunresolved: " << agg.summary.unresolved.size() << "\nmerges: " << s.dedup_log.size() << "\n";
  return os.str();
}

}  // namespace zt::evidence
