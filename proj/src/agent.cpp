#include "zoomtrace/agent.hpp"

#include <chrono>

#include "zoomtrace/prompts.hpp"

namespace zt::agent {

namespace {

constexpr std::pair<Outcome, const char*> kOutcomeNames[] = {
    {Outcome::answered, "answered"},
    {Outcome::dual_action, "dual_action"},
    {Outcome::no_action, "no_action"},
    {Outcome::multiple_actions, "multiple_actions"},
    {Outcome::unknown_tool, "unknown_tool"},
    {Outcome::parse_error, "parse_error"},
    {Outcome::unknown_view, "unknown_view"},
    {Outcome::bad_bbox, "bad_bbox"},
    {Outcome::budget_exhausted, "budget_exhausted"},
    {Outcome::depth_exceeded, "depth_exceeded"},
    {Outcome::max_turns, "max_turns"},
    {Outcome::transport_error, "transport_error"},
};

Outcome outcome_of(imagetool::ToolError::Kind k) {
  switch (k) {
    case imagetool::ToolError::Kind::unknown_id: return Outcome::unknown_view;
    case imagetool::ToolError::Kind::bad_bbox:
    case imagetool::ToolError::Kind::zero_area: return Outcome::bad_bbox;
    case imagetool::ToolError::Kind::budget_exhausted: return Outcome::budget_exhausted;
    case imagetool::ToolError::Kind::depth_exceeded: return Outcome::depth_exceeded;
  }
  return Outcome::bad_bbox;
}

ViewRecord record_of(const imagetool::View& v) {
  return ViewRecord{v.view_id, v.parent, v.bbox, v.region, v.level, v.out_width, v.out_height, v.chain};
}

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

std::string evidence_line(const Analysis& a) {
  std::string s = "Evidence so far: " + std::to_string(a.aggregate.summary.total_verified) + " verified";
  for (const auto& [label, n] : a.aggregate.summary.counts) {
    s += ", " + (label.empty() ? std::string("object") : label) + "=" + std::to_string(n);
  }
  return s;
}

}  // namespace

const char* to_string(Outcome o) {
  for (const auto& [k, name] : kOutcomeNames) {
    if (k == o) return name;
  }
  return "?";
}

std::optional<Outcome> outcome_from_string(const std::string& s) {
  for (const auto& [k, name] : kOutcomeNames) {
    if (s == name) return k;
  }
  return std::nullopt;
}

std::string EpisodeRecord::transcript() const {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) out += '\n';
    out += turns[i];
    if (i < observations.size()) {
      out += '\n';
      out += traj::serialize(traj::Step{traj::Observation{"", observations[i]}, 0});
    }
  }
  return out;
}

Analysis analyze(const EpisodeRecord& r) {
  Analysis a;
  const auto& c = r.config;
  a.parsed = traj::parse(r.transcript(), traj::ParseOptions{c.task, c.max_bytes, 0});
  a.format = traj::validate_format(a.parsed, c.task);
  const auto& t = a.parsed.trajectory;
  a.qplan = plan::evaluate_qplan(t, c.task, traj::derive_views(t), c.plan);

  evidence::FrameMap frames;
  for (const auto& v : r.views) frames[v.view_id] = v.chain;
  try {
    a.raw_evidence = evidence::ingest(t, frames, evidence::IngestOptions{c.obj_frame});
  } catch (const evidence::IngestError& e) {
    a.ingest_errors = e.lines;
  }
  a.evidence = c.dedup ? evidence::dedup(a.raw_evidence, c.dedup_iou) : a.raw_evidence;
  a.aggregate = evidence::aggregate(a.evidence, a.qplan.state);
  if (const auto* ans = t.final_answer();
      ans && (c.task == traj::TaskKind::count || c.task == traj::TaskKind::grounding)) {
    a.consistency = evidence::consistency(*ans, a.aggregate.summary, c.target_label);
  }
  return a;
}

std::optional<reward::RewardBreakdown> score_episode(const EpisodeRecord& r, const Annotation& gt) {
  return score_episode(r, analyze(r), gt);
}

std::optional<reward::RewardBreakdown> score_episode(const EpisodeRecord& r, const Analysis& a, const Annotation& gt) {
  const auto& c = r.config;
  if (gt.task != c.task) {
    throw std::invalid_argument(std::string("record task '") + traj::to_string(c.task) +
                                "' does not match ground truth task '" + traj::to_string(gt.task) + "'");
  }
  if (c.task != traj::TaskKind::count && c.task != traj::TaskKind::grounding) return std::nullopt;

  reward::RewardInputs in;
  in.task = c.task;
  in.r_fmt = a.format.r_fmt;
  in.q_plan = a.qplan.value;
  const auto gold = gt.gold_answer();
  if (!gold) throw std::invalid_argument("ground truth has no usable gold answer");
  const auto* ans = a.parsed.trajectory.final_answer();
  if (in.r_fmt && ans) {
    if (c.task == traj::TaskKind::count) {
      const long long y = std::get<long long>(gold->payload);
      in.r_acc = reward::acc_count(std::get<long long>(ans->payload), y);
      in.r_iou = reward::iou_count(evidence::verified_boxes(a.evidence, c.target_label), gt.relative_targets());
      in.difficulty = plan::difficulty_count(y, c.weights.lambda_c);
    } else {
      const auto g = geo::NormBox::make(std::get<traj::BoxLiteral>(gold->payload)[0],
                                        std::get<traj::BoxLiteral>(gold->payload)[1],
                                        std::get<traj::BoxLiteral>(gold->payload)[2],
                                        std::get<traj::BoxLiteral>(gold->payload)[3]);
      const auto& lit = std::get<traj::BoxLiteral>(ans->payload);
      const auto p = geo::NormBox::make(lit[0], lit[1], lit[2], lit[3]);
      in.r_acc = reward::acc_ground(p, g);
      in.r_iou = reward::iou_ground(p, g);
      in.difficulty = plan::difficulty_grounding(g, c.weights.lambda_g);
    }
  } else {
    in.r_fmt = 0;
  }
  return reward::total_reward(in, c.weights);
}

std::string system_prompt_for(const EpisodeConfig& c) {
  const std::string_view task_asset =
      c.prompt_asset.empty() ? prompts::default_task_asset(c.task) : std::string_view(c.prompt_asset);
  return std::string(prompts::asset("system")) + "\n\n" + std::string(prompts::asset(task_asset));
}

EpisodeRecord run_episode(std::shared_ptr<const scene::Scene> scene, const std::string& question, Backend& backend,
                          const EpisodeConfig& config, const Annotation* gt) {
  if (config.max_turns < 1) throw std::invalid_argument("max_turns must be at least 1");
  imagetool::Session session(scene, config.max_pixels, config.budget);

  EpisodeRecord rec;
  rec.id = scene->source() + "#" + std::to_string(config.seed);
  rec.scene_source = scene->source();
  rec.scene_width = scene->width();
  rec.scene_height = scene->height();
  rec.question = question;
  rec.config = config;
  rec.backend = backend.name();
  rec.system_prompt = system_prompt_for(config);
  rec.user_prompt = question + "\n" + traj::Observation::make(session.global().view_id, session.global().frame_note()).text;

  BackendContext ctx;
  ctx.task = config.task;
  ctx.question = question;
  ctx.target_label = config.target_label;
  ctx.palette = scene->palette();
  ctx.image = [&session](const std::string& id) -> const raster::Image* {
    const auto* v = session.find(id);
    return v ? &v->pixels : nullptr;
  };

  std::vector<Message> history{{Message::Role::system, rec.system_prompt, ""},
                               {Message::Role::user, rec.user_prompt, session.global().view_id}};
  backend.reset(config.seed);

  bool terminal = false;
  for (int turn = 0; turn < config.max_turns && !terminal; ++turn) {
    TurnTiming timing{turn, 0, 0};
    auto t0 = std::chrono::steady_clock::now();
    std::string text;
    try {
      text = backend.next_turn(history, ctx);
    } catch (const TransportError& e) {
      rec.outcome = Outcome::transport_error;
      rec.outcome_detail = e.what();
      timing.backend_ms = ms_since(t0);
      rec.timing.push_back(timing);
      terminal = true;
      break;
    }
    timing.backend_ms = ms_since(t0);
    rec.turns.push_back(text);
    history.push_back(Message{Message::Role::assistant, text, ""});

    const auto parsed = traj::parse(text, traj::ParseOptions{config.task, config.max_bytes, turn});
    int tools = 0, answers = 0, observations = 0;
    const traj::ToolCall* call = nullptr;
    for (const auto& s : parsed.trajectory.steps) {
      if (auto tc = s.as<traj::ToolCall>()) {
        ++tools;
        call = tc;
      }
      answers += s.as<traj::Answer>() != nullptr;
      observations += s.as<traj::Observation>() != nullptr;
    }
    terminal = true;
    if (!parsed.ok()) {
      rec.outcome = Outcome::parse_error;
      rec.outcome_detail = std::string(traj::to_string(parsed.errors.front().kind)) + " at byte " +
                           std::to_string(parsed.errors.front().offset) + ": " + parsed.errors.front().message;
    } else if (observations) {
      rec.outcome = Outcome::parse_error;
      rec.outcome_detail = "model turn contains an observation";
    } else if (tools && answers) {
      rec.outcome = Outcome::dual_action;
      rec.outcome_detail = "turn " + std::to_string(turn) + " has both a tool call and an answer";
    } else if (tools + answers == 0) {
      rec.outcome = Outcome::no_action;
      rec.outcome_detail = "turn " + std::to_string(turn) + " has neither a tool call nor an answer";
    } else if (tools > 1 || answers > 1) {
      rec.outcome = Outcome::multiple_actions;
      rec.outcome_detail = "turn " + std::to_string(turn) + " has more than one action";
    } else if (answers) {
      rec.outcome = Outcome::answered;
    } else if (call->name != traj::kZoomToolName) {
      rec.outcome = Outcome::unknown_tool;
      rec.outcome_detail = "unknown tool '" + call->name + "'";
    } else {
      auto t1 = std::chrono::steady_clock::now();
      try {
        const auto& v = session.zoom_in(call->source_image_id, call->bbox);
        std::string obs = traj::Observation::make(v.view_id, v.frame_note()).text;
        if (config.inject_evidence) {
          rec.views.clear();
          for (const auto& sv : session.views()) rec.views.push_back(record_of(sv));
          rec.observations.push_back(obs);
          obs += "\n" + evidence_line(analyze(rec));
          rec.observations.pop_back();
        }
        rec.observations.push_back(obs);
        history.push_back(Message{Message::Role::tool, obs, v.view_id});
        terminal = false;
      } catch (const imagetool::ToolError& e) {
        rec.outcome = outcome_of(e.kind);
        rec.outcome_detail = e.what();
      }
      timing.tool_ms = ms_since(t1);
    }
    rec.timing.push_back(timing);
  }
  if (!terminal) {
    rec.outcome = Outcome::max_turns;
    rec.outcome_detail = "no answer within " + std::to_string(config.max_turns) + " turns";
  }

  rec.views.clear();
  for (const auto& v : session.views()) rec.views.push_back(record_of(v));
  rec.budget = session.budget();
  rec.analysis = analyze(rec);
  if (gt) rec.breakdown = score_episode(rec, rec.analysis, *gt);
  return rec;
}

GroupResult run_group(std::shared_ptr<const scene::Scene> scene, const std::string& question, const Backend& backend,
                      int group_size, const EpisodeConfig& config, const Annotation& gt) {
  if (group_size < 2) throw reward::RewardError("a group needs at least two episodes");
  GroupResult out;
  out.records.resize(static_cast<std::size_t>(group_size));
  std::vector<double> rewards(static_cast<std::size_t>(group_size), -config.weights.gamma_fmt);
  std::vector<std::unique_ptr<Backend>> backends;
  for (int i = 0; i < group_size; ++i) backends.push_back(backend.clone());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < group_size; ++i) {
    const auto k = static_cast<std::size_t>(i);
    EpisodeConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(i);
    try {
      out.records[k] = run_episode(scene, question, *backends[k], c, &gt);
      if (out.records[k].breakdown) rewards[k] = out.records[k].breakdown->total;
    } catch (const std::exception& e) {
      auto& r = out.records[k];
      r.id = scene->source() + "#" + std::to_string(c.seed);
      r.config = c;
      r.outcome = Outcome::transport_error;
      r.outcome_detail = e.what();
      r.breakdown = reward::total_reward(reward::RewardInputs{c.task, 0}, c.weights);
    }
  }
  out.scores = reward::group_advantages(rewards);
  return out;
}

reward::GroupScores score_group(const std::vector<EpisodeRecord>& records, const Annotation& gt) {
  std::vector<double> rewards;
  for (const auto& r : records) {
    const auto b = score_episode(r, gt);
    if (!b) throw reward::RewardError("group scoring needs counting or grounding records");
    rewards.push_back(b->total);
  }
  return reward::group_advantages(rewards);
}

}  // namespace zt::agent
