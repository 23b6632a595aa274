#pragma once

// Evidence state: Obj lines mapped to the global frame, same-label
// de-duplication, attachment to the plan hierarchy and answer checks.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "zoomtrace/geometry.hpp"
#include "zoomtrace/plan.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::evidence {

enum class Status { verified, rejected, unresolved };
const char* to_string(Status s);

struct EvidenceEntry {
  geo::NormBox global_box;
  std::string label;
  Status status = Status::verified;
  int source_turn = 0;
  int depth = 0;
  std::string view_id;
  std::string note;
  bool operator==(const EvidenceEntry&) const = default;
};

struct MergeRecord {
  std::string label;
  geo::NormBox kept_box;    // box of the surviving entry before the merge
  geo::NormBox merged_box;  // box of the absorbed entry
  geo::NormBox result_box;
  double iou = 0;
  int kept_turn = 0;
  int merged_turn = 0;
  bool operator==(const MergeRecord&) const = default;
};

struct EvidenceStore {
  std::vector<EvidenceEntry> entries;
  std::vector<MergeRecord> dedup_log;
  bool operator==(const EvidenceStore&) const = default;
};

using FrameMap = std::map<std::string, geo::FrameChain>;

struct IngestError : public std::runtime_error {
  std::vector<std::string> lines;
  IngestError(const std::string& msg, std::vector<std::string> l) : std::runtime_error(msg), lines(std::move(l)) {}
};

// Frame in which local-summary Obj lines are read.
enum class ObjFrame { current_view, global };

struct IngestOptions {
  ObjFrame local_frame = ObjFrame::current_view;
  // An aggregation line matching a local entry at this iou restates it.
  double restate_iou = 0.5;
};

inline constexpr double kDefaultDedupIou = 0.5;

// Throws IngestError listing every Obj line whose view has no chain.
EvidenceStore ingest(const traj::Trajectory& t, const FrameMap& frames, const IngestOptions& options = {});
// Repeats greedy passes until nothing merges.
EvidenceStore dedup(EvidenceStore s, double tau = kDefaultDedupIou);

inline constexpr const char* kRootNode = "";

struct TreeNode {
  std::string item_id;  // kRootNode for the root
  std::string parent;
  std::vector<std::string> children;
  std::vector<std::size_t> entries;  // indices into the store
  bool operator==(const TreeNode&) const = default;
};

struct EvidenceTree {
  std::map<std::string, TreeNode> nodes;
  bool operator==(const EvidenceTree&) const = default;
};

struct Summary {
  std::map<std::string, long long> counts;  // verified entries per label
  std::map<std::string, geo::NormBox> best_box;
  std::vector<std::size_t> unresolved;
  long long total_verified = 0;
  long long count_for(const std::string& label) const;
  bool operator==(const Summary&) const = default;
};

struct Aggregate {
  EvidenceTree tree;
  Summary summary;
};

Aggregate aggregate(const EvidenceStore& s, const plan::PlanState& plan);

struct ConsistencyReport {
  bool applicable = true;
  bool consistent = false;
  long long delta = 0;  // answer minus evidence count
  double iou = 0;
  std::string detail;
};

// An empty label counts every verified entry.
ConsistencyReport consistency(const traj::Answer& answer, const Summary& summary, const std::string& label = "");

// Verified boxes of one label (all labels when empty), in store order.
std::vector<geo::NormBox> verified_boxes(const EvidenceStore& s, const std::string& label = "");

std::string render_report(const EvidenceStore& s, const Aggregate& agg, const plan::PlanState& plan);

}  // namespace zt::evidence
