#pragma once

// Episode runtime: drives a backend through the observe/plan/track loop,
// executes zoom_in calls, records the trajectory and scores it.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zoomtrace/annotation.hpp"
#include "zoomtrace/backend.hpp"
#include "zoomtrace/evidence.hpp"
#include "zoomtrace/imagetool.hpp"
#include "zoomtrace/plan.hpp"
#include "zoomtrace/reward.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::agent {

struct EpisodeConfig {
  traj::TaskKind task = traj::TaskKind::count;
  std::string target_label;
  imagetool::Budget budget;
  std::size_t max_pixels = imagetool::kDefaultMaxPixels;
  reward::RewardWeights weights;
  plan::PlanConfig plan;
  std::string prompt_asset;  // empty: the task's default asset
  int max_turns = imagetool::kDefaultMaxToolCalls + 1;
  bool dedup = true;
  double dedup_iou = evidence::kDefaultDedupIou;
  evidence::ObjFrame obj_frame = evidence::ObjFrame::current_view;
  std::size_t max_bytes = 65536;
  bool inject_evidence = false;  // append an evidence summary to observations
  std::uint64_t seed = 0;
  bool operator==(const EpisodeConfig&) const = default;
};

enum class Outcome {
  answered,
  dual_action,  // tool call and answer in one turn
  no_action,
  multiple_actions,
  unknown_tool,
  parse_error,
  unknown_view,
  bad_bbox,
  budget_exhausted,
  depth_exceeded,
  max_turns,
  transport_error,
};

const char* to_string(Outcome o);
std::optional<Outcome> outcome_from_string(const std::string& s);

struct TurnTiming {
  int turn = 0;
  double backend_ms = 0;
  double tool_ms = 0;
};

struct ViewRecord {
  std::string view_id;
  std::string parent;
  traj::BoxLiteral bbox{};
  raster::IRect region;
  geo::ZoomLevel level = geo::ZoomLevel::L0;
  int out_width = 0;
  int out_height = 0;
  geo::FrameChain chain;
  bool operator==(const ViewRecord&) const = default;
};

// Derived state recomputed from the transcript and views.
struct Analysis {
  traj::ParseResult parsed;
  traj::FormatReport format;
  plan::QPlanReport qplan;
  evidence::EvidenceStore raw_evidence;
  evidence::EvidenceStore evidence;
  evidence::Aggregate aggregate;
  std::optional<evidence::ConsistencyReport> consistency;
  std::vector<std::string> ingest_errors;
};

struct EpisodeRecord {
  std::string id;
  std::string scene_source;
  long long scene_width = 0;
  long long scene_height = 0;
  std::string question;
  EpisodeConfig config;
  std::string backend;
  std::string system_prompt;
  std::string user_prompt;
  std::vector<std::string> turns;         // raw model text per turn
  std::vector<std::string> observations;  // observation text after turn i
  std::vector<ViewRecord> views;
  imagetool::Budget budget;
  Outcome outcome = Outcome::no_action;
  std::string outcome_detail;
  std::vector<TurnTiming> timing;
  // Filled by scoring.
  Analysis analysis;
  std::optional<reward::RewardBreakdown> breakdown;

  // Model turns and observations interleaved in tagged form.
  std::string transcript() const;
};

// Recomputes the derived state of a record from its transcript and views.
Analysis analyze(const EpisodeRecord& r);

// Reward breakdown from the record alone plus ground truth; nullopt for task
// kinds without a reward.
std::optional<reward::RewardBreakdown> score_episode(const EpisodeRecord& r, const Annotation& gt);
std::optional<reward::RewardBreakdown> score_episode(const EpisodeRecord& r, const Analysis& a, const Annotation& gt);

std::string system_prompt_for(const EpisodeConfig& c);

// Runs one episode; terminal conditions are outcomes, not exceptions.
EpisodeRecord run_episode(std::shared_ptr<const scene::Scene> scene, const std::string& question, Backend& backend,
                          const EpisodeConfig& config, const Annotation* gt = nullptr);

struct GroupResult {
  reward::GroupScores scores;
  std::vector<EpisodeRecord> records;
};

// G independent episodes on clones of `backend`, seeded config.seed + i.
// Episodes run concurrently.
GroupResult run_group(std::shared_ptr<const scene::Scene> scene, const std::string& question, const Backend& backend,
                      int group_size, const EpisodeConfig& config, const Annotation& gt);

// Group advantages of stored records rescored against ground truth.
reward::GroupScores score_group(const std::vector<EpisodeRecord>& records, const Annotation& gt);

nlohmann::json to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const reward::RewardBreakdown& b);
reward::RewardBreakdown breakdown_from_json(const nlohmann::json& j);
nlohmann::json to_json(const reward::RewardWeights& w);
reward::RewardWeights weights_from_json(const nlohmann::json& j);

}  // namespace zt::agent
