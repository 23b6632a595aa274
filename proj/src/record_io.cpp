#include <stdexcept>

#include "zoomtrace/agent.hpp"

namespace zt::agent {

using nlohmann::json;

namespace {

json chain_json(const geo::FrameChain& c) {
  json links = json::array();
  for (const auto& l : c.links) {
    links.push_back({{"frame", l.region.frame_id},
                     {"x", l.region.x_min},
                     {"y", l.region.y_min},
                     {"w", l.region.width},
                     {"h", l.region.height},
                     {"view", l.view_id}});
  }
  return links;
}

geo::FrameChain chain_from(const json& j) {
  geo::FrameChain c;
  for (const auto& l : j) {
    c.links.push_back(geo::ChainLink{
        geo::FrameBox{l.at("frame").get<std::string>(), l.at("x").get<double>(), l.at("y").get<double>(),
                      l.at("w").get<double>(), l.at("h").get<double>()},
        l.at("view").get<std::string>()});
  }
  return c;
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json config_json(const EpisodeConfig& c) {
  return {{"task", traj::to_string(c.task)},
          {"target_label", c.target_label},
          {"max_tool_calls", c.budget.max_tool_calls},
          {"max_depth", c.budget.max_depth},
          {"max_pixels", c.max_pixels},
          {"weights", to_json(c.weights)},
          {"plan_max_items", c.plan.max_items},
          {"plan_max_child_depth", c.plan.max_child_depth},
          {"plan_coverage", c.plan.coverage_threshold},
          {"prompt_asset", c.prompt_asset},
          {"max_turns", c.max_turns},
          {"dedup", c.dedup},
          {"dedup_iou", c.dedup_iou},
          {"obj_frame", c.obj_frame == evidence::ObjFrame::global ? "global" : "current_view"},
          {"max_bytes", c.max_bytes},
          {"inject_evidence", c.inject_evidence},
          {"seed", c.seed}};
}

EpisodeConfig config_from(const json& j) {
  EpisodeConfig c;
  const auto task = traj::task_kind_from_string(j.at("task").get<std::string>());
  if (!task) throw std::invalid_argument("record has an unknown task kind");
  c.task = *task;
  c.target_label = j.value("target_label", "");
  c.budget.max_tool_calls = j.value("max_tool_calls", c.budget.max_tool_calls);
  c.budget.max_depth = j.value("max_depth", c.budget.max_depth);
  c.max_pixels = j.value("max_pixels", c.max_pixels);
  if (j.contains("weights")) c.weights = weights_from_json(j.at("weights"));
  c.plan.max_items = j.value("plan_max_items", c.plan.max_items);
  c.plan.max_child_depth = j.value("plan_max_child_depth", c.plan.max_child_depth);
  c.plan.coverage_threshold = j.value("plan_coverage", c.plan.coverage_threshold);
  c.prompt_asset = j.value("prompt_asset", "");
  c.max_turns = j.value("max_turns", c.max_turns);
  c.dedup = j.value("dedup", c.dedup);
  c.dedup_iou = j.value("dedup_iou", c.dedup_iou);
  c.obj_frame = j.value("obj_frame", "current_view") == "global" ? evidence::ObjFrame::global
                                                                  : evidence::ObjFrame::current_view;
  c.max_bytes = j.value("max_bytes", c.max_bytes);
  c.inject_evidence = j.value("inject_evidence", false);
  c.seed = j.value("seed", std::uint64_t{0});
  return c;
}

}  // namespace

json to_json(const reward::RewardWeights& w) {
  return {{"w1", w.w1},       {"w2", w.w2},       {"w3", w.w3},
          {"w4", w.w4},       {"alpha", w.alpha}, {"beta", w.beta},
          {"gamma_fmt", w.gamma_fmt}, {"gamma_plan", w.gamma_plan}, {"lambda_c", w.lambda_c},
          {"lambda_g", w.lambda_g}};
}

reward::RewardWeights weights_from_json(const json& j) {
  reward::RewardWeights w;
  w.w1 = j.value("w1", w.w1);
  w.w2 = j.value("w2", w.w2);
  w.w3 = j.value("w3", w.w3);
  w.w4 = j.value("w4", w.w4);
  w.alpha = j.value("alpha", w.alpha);
  w.beta = j.value("beta", w.beta);
  w.gamma_fmt = j.value("gamma_fmt", w.gamma_fmt);
  w.gamma_plan = j.value("gamma_plan", w.gamma_plan);
  w.lambda_c = j.value("lambda_c", w.lambda_c);
  w.lambda_g = j.value("lambda_g", w.lambda_g);
  w.check();
  return w;
}

json to_json(const reward::RewardBreakdown& b) {
  return {{"r_fmt", b.r_fmt},       {"r_acc", opt(b.r_acc)},   {"r_iou", opt(b.r_iou)},
          {"q_plan", opt(b.q_plan)}, {"difficulty", opt(b.difficulty)}, {"r_plan", opt(b.r_plan)},
          {"total", b.total}};
}

reward::RewardBreakdown breakdown_from_json(const json& j) {
  reward::RewardBreakdown b;
  b.r_fmt = j.at("r_fmt").get<int>();
  b.r_acc = opt_from<double>(j, "r_acc");
  b.r_iou = opt_from<double>(j, "r_iou");
  b.q_plan = opt_from<int>(j, "q_plan");
  b.difficulty = opt_from<double>(j, "difficulty");
  b.r_plan = opt_from<double>(j, "r_plan");
  b.total = j.at("total").get<double>();
  return b;
}

json to_json(const EpisodeRecord& r) {
  json views = json::array();
  for (const auto& v : r.views) {
    views.push_back({{"id", v.view_id},
                     {"parent", v.parent},
                     {"bbox", v.bbox},
                     {"region", {v.region.x, v.region.y, v.region.w, v.region.h}},
                     {"level", geo::to_string(v.level)},
                     {"out_size", {v.out_width, v.out_height}},
                     {"chain", chain_json(v.chain)}});
  }
  json timing = json::array();
  for (const auto& t : r.timing) timing.push_back({{"turn", t.turn}, {"backend_ms", t.backend_ms}, {"tool_ms", t.tool_ms}});

  // Derived state is written for readers; loading recomputes it.
  const auto& a = r.analysis;
  json evidence = json::array();
  for (const auto& e : a.evidence.entries) {
    evidence.push_back({{"label", e.label},
                        {"box", e.global_box.literal()},
                        {"status", evidence::to_string(e.status)},
                        {"turn", e.source_turn},
                        {"depth", e.depth},
                        {"view", e.view_id}});
  }
  json violations = json::array();
  for (const auto& v : a.qplan.violations) violations.push_back(std::string(plan::to_string(v.kind)) + ": " + v.detail);
  json items = json::array();
  for (const auto& id : a.qplan.state.order) {
    const auto& it = a.qplan.state.items.at(id);
    items.push_back({{"id", id}, {"status", plan::to_string(it.status)}, {"depth", it.depth}, {"parent", it.parent}});
  }
  json summary{{"r_fmt", a.format.r_fmt},
               {"format_diagnostics", a.format.diagnostics},
               {"q_plan", static_cast<int>(a.qplan.value)},
               {"plan_violations", violations},
               {"plan_bypass", a.qplan.bypass_reasons},
               {"plan_items", items},
               {"evidence", evidence},
               {"merges", a.evidence.dedup_log.size()},
               {"counts", a.aggregate.summary.counts},
               {"ingest_errors", a.ingest_errors}};
  if (a.consistency) {
    summary["consistency"] = {{"consistent", a.consistency->consistent},
                              {"delta", a.consistency->delta},
                              {"detail", a.consistency->detail}};
  }
  return {{"id", r.id},
          {"scene", {{"source", r.scene_source}, {"width", r.scene_width}, {"height", r.scene_height}}},
          {"question", r.question},
          {"config", config_json(r.config)},
          {"backend", r.backend},
          {"system_prompt", r.system_prompt},
          {"user_prompt", r.user_prompt},
          {"turns", r.turns},
          {"observations", r.observations},
          {"views", views},
          {"budget", {{"used_tool_calls", r.budget.used_tool_calls}, {"deepest", r.budget.deepest}}},
          {"outcome", to_string(r.outcome)},
          {"outcome_detail", r.outcome_detail},
          {"timing", timing},
          {"summary", summary},
          {"breakdown", r.breakdown ? to_json(*r.breakdown) : json(nullptr)}};
}

EpisodeRecord record_from_json(const json& j) {
  EpisodeRecord r;
  r.id = j.value("id", "");
  const auto& sc = j.at("scene");
  r.scene_source = sc.value("source", "");
  r.scene_width = sc.value("width", 0LL);
  r.scene_height = sc.value("height", 0LL);
  r.question = j.value("question", "");
  r.config = config_from(j.at("config"));
  r.backend = j.value("backend", "");
  r.system_prompt = j.value("system_prompt", "");
  r.user_prompt = j.value("user_prompt", "");
  r.turns = j.at("turns").get<std::vector<std::string>>();
  r.observations = j.at("observations").get<std::vector<std::string>>();
  for (const auto& v : j.at("views")) {
    ViewRecord vr;
    vr.view_id = v.at("id").get<std::string>();
    vr.parent = v.value("parent", "");
    vr.bbox = v.at("bbox").get<traj::BoxLiteral>();
    const auto& g = v.at("region");
    vr.region = raster::IRect{g.at(0).get<long long>(), g.at(1).get<long long>(), g.at(2).get<long long>(),
                              g.at(3).get<long long>()};
    const auto lv = v.value("level", "L0");
    vr.level = lv == "L2" ? geo::ZoomLevel::L2 : lv == "L1" ? geo::ZoomLevel::L1 : geo::ZoomLevel::L0;
    vr.out_width = v.at("out_size").at(0).get<int>();
    vr.out_height = v.at("out_size").at(1).get<int>();
    vr.chain = chain_from(v.at("chain"));
    r.views.push_back(std::move(vr));
  }
  if (j.contains("budget")) {
    r.budget = r.config.budget;
    r.budget.used_tool_calls = j.at("budget").value("used_tool_calls", 0);
    r.budget.deepest = j.at("budget").value("deepest", 0);
  }
  const auto o = outcome_from_string(j.value("outcome", ""));
  if (!o) throw std::invalid_argument("record has an unknown outcome");
  r.outcome = *o;
  r.outcome_detail = j.value("outcome_detail", "");
  for (const auto& t : j.value("timing", json::array())) {
    r.timing.push_back(TurnTiming{t.value("turn", 0), t.value("backend_ms", 0.0), t.value("tool_ms", 0.0)});
  }
  if (j.contains("breakdown") && !j.at("breakdown").is_null()) r.breakdown = breakdown_from_json(j.at("breakdown"));
  r.analysis = analyze(r);
  return r;
}

}  // namespace zt::agent
