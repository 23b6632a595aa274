#pragma once

// Plan state machine: checklist lifecycle, transition legality, Q_plan and
// the task difficulty coefficient.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "zoomtrace/geometry.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::plan {

struct PlanError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Status { pending, completed, expanded };
const char* to_string(Status s);

struct PlanItem {
  std::string id;
  std::string goal;
  std::optional<geo::NormBox> roi;        // in the frame the item was authored in
  std::optional<geo::RealBox> global_roi;  // same region in global relative units
  std::string frame_view;
  Status status = Status::pending;
  int depth = 0;
  std::string parent;
  int created_seq = 0;     // inspections seen when the item was created
  bool covered = false;    // some inspection covered it at any point
  bool bypassed = false;   // completed without a prior covering inspection
  bool operator==(const PlanItem&) const = default;
};

struct ItemSpec {
  std::string id;
  std::string goal;
  std::optional<geo::NormBox> roi;
  std::optional<geo::RealBox> global_roi;
  std::string frame_view = traj::kGlobalViewId;
  bool operator==(const ItemSpec&) const = default;
};

namespace ev {
struct Init {
  std::vector<ItemSpec> items;
  bool operator==(const Init&) const = default;
};
struct Inspect {
  geo::RealBox region;  // global relative units
  std::string view_id;
  bool operator==(const Inspect&) const = default;
};
struct Complete {
  std::string id;
  bool operator==(const Complete&) const = default;
};
struct Expand {
  std::string id;
  std::vector<ItemSpec> children;
  bool operator==(const Expand&) const = default;
};
struct Answer {
  bool aggregation_claim = false;
  bool operator==(const Answer&) const = default;
};
// A progress listing referring to an item the plan never declared.
struct UnknownListing {
  std::string id;
  bool operator==(const UnknownListing&) const = default;
};
// A progress listing that un-checks a completed item.
struct Reopen {
  std::string id;
  bool operator==(const Reopen&) const = default;
};
}  // namespace ev

using Event = std::variant<ev::Init, ev::Inspect, ev::Complete, ev::Expand, ev::Answer, ev::UnknownListing, ev::Reopen>;

std::string describe(const Event& e);

enum class ViolationKind {
  unknown_id,
  recomplete,
  depth_breach,
  illegal_transition,
  unlisted_item,
  reopened,
  uninspected_aggregation,
  plan_too_large,
};
const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

struct PlanConfig {
  std::size_t max_items = 8;       // K
  int max_child_depth = 1;         // two layers: depth 0 and 1
  double coverage_threshold = 0.5; // intersection / item area
  bool operator==(const PlanConfig&) const = default;
};

struct LogEntry {
  Event event;
  bool derived = false;  // auto-completion of an expanded parent
  bool operator==(const LogEntry&) const = default;
};

struct PlanState {
  std::map<std::string, PlanItem> items;
  std::vector<std::string> order;  // insertion order of ids
  std::vector<LogEntry> event_log;
  std::vector<Violation> violations;
  std::vector<geo::RealBox> inspections;
  std::vector<std::string> flags;  // non-fatal notes such as full-frame rois
  bool initialized = false;
  bool answered = false;
  PlanConfig config;

  std::size_t pending_count() const;
  bool operator==(const PlanState&) const = default;
};

// Throws PlanError on an empty plan or when the item count exceeds K.
PlanState init_plan(const std::vector<ItemSpec>& items, const PlanConfig& config = {});
PlanState apply_event(PlanState s, const Event& e);
// Replays the non-derived entries of a log from scratch.
PlanState replay(const std::vector<LogEntry>& log, const PlanConfig& config = {});

// Checklist items of a think section, authored while viewing `frame_view`.
std::vector<ItemSpec> item_specs(const std::vector<traj::ChecklistItem>& items, const std::string& frame_view,
                                 const traj::ViewMap& views);

enum class QPlan { violation = -1, bypass = 0, valid = 1 };

struct QPlanReport {
  QPlan value = QPlan::valid;
  std::vector<Violation> violations;
  std::vector<std::string> bypass_reasons;
  std::vector<Event> events;
  PlanState state;
  bool had_plan = false;
};

// Events implied by a trajectory, in order.
std::vector<Event> events_from(const traj::Trajectory& t, const traj::ViewMap& views, const PlanConfig& config);

QPlanReport evaluate_qplan(const traj::Trajectory& t, traj::TaskKind task, const PlanConfig& config = {});
QPlanReport evaluate_qplan(const traj::Trajectory& t, traj::TaskKind task, const traj::ViewMap& views,
                           const PlanConfig& config);

// Counting: 1 - exp(-lambda_c * y). Grounding: exp(-lambda_g * area / 1e6).
// Clamped into [1e-6, 1].
inline constexpr double kMinDifficulty = 1e-6;
double difficulty_count(long long gt_count, double lambda_c);
double difficulty_grounding(const geo::NormBox& gt_box, double lambda_g);

}  // namespace zt::plan
