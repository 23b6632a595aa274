#pragma once

// Dataset quality gates and tooling: checklist compilation from oracle boxes,
// leakage detection, structure and consistency checks, corpus filtering and
// SFT export.

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zoomtrace/annotation.hpp"
#include "zoomtrace/geometry.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::corpus {

struct ChecklistNode {
  std::string id;
  geo::NormBox region;
  std::vector<std::size_t> targets;  // indices into the annotation's boxes
  std::vector<ChecklistNode> children;
  bool leaf() const { return children.empty(); }
  bool operator==(const ChecklistNode&) const = default;
};

struct Checklist {
  ChecklistNode root;
  std::size_t leaf_count() const;
  int depth() const;
  // Plan-ready items, children nested under split quadrants.
  std::vector<traj::ChecklistItem> items() const;
};

inline constexpr std::size_t kDefaultQuadrantMax = 15;

// Boxes are assigned by centre; empty quadrants are dropped.
Checklist compile_checklist(const Annotation& ann, std::size_t q_max = kDefaultQuadrantMax);

struct LeakFlag {
  std::size_t step_index = 0;
  int turn_index = 0;
  traj::BoxLiteral literal{};
  geo::RealBox global;
  std::size_t oracle_index = 0;
  double iou = 0;
};

inline constexpr double kLeakIou = 0.9;

// Box literals in think text that match an oracle box before any observation
// whose view contains it.
std::vector<LeakFlag> detect_leakage(const traj::Trajectory& t, const Annotation& ann, const traj::ViewMap& views,
                                     double threshold = kLeakIou);
std::vector<LeakFlag> detect_leakage(const traj::Trajectory& t, const Annotation& ann, double threshold = kLeakIou);

struct GateResult {
  bool pass = true;
  std::vector<std::string> problems;
};

// Alternation, plan-before-execution, single [PLAN], and the SOP layer cap.
GateResult validate_structure(const traj::Trajectory& t, traj::TaskKind task, const std::string& prompt_asset = "");
GateResult self_consistency(const traj::Trajectory& t, const Annotation& ann);

enum class Reason { overlap, syntax, structure, leakage, inconsistency };
const char* to_string(Reason r);

struct QcVerdict {
  bool kept = true;
  std::vector<Reason> reasons;
  std::vector<std::string> details;
};

struct CorpusRecord {
  std::string id;
  traj::TaskKind task = traj::TaskKind::count;
  std::string question;
  std::string trajectory;
  std::string prompt_asset;
  bool operator==(const CorpusRecord&) const = default;
};

nlohmann::json to_json(const CorpusRecord& r);
CorpusRecord corpus_record_from_json(const nlohmann::json& j);

struct FilterOptions {
  std::set<std::string> blocklist;  // ids or content hashes of benchmark items
  double leak_iou = kLeakIou;
  std::size_t max_bytes = 65536;
};

// Content hash used by the blocklist (SHA-256 of the trajectory text, hex).
std::string content_hash(const CorpusRecord& r);

// Gates in order, stopping at the first failure.
QcVerdict qc_record(const CorpusRecord& r, const Annotation* ann, const FilterOptions& options = {});

struct QcReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::map<Reason, std::size_t> drops;
  std::optional<double> kept_ratio() const;
  std::string text() const;
  nlohmann::json to_json() const;
};

// Input line of a corpus stream: a parsed record or the raw text that failed.
struct CorpusLine {
  std::optional<CorpusRecord> record;
  std::string raw;
  std::string error;
};

std::vector<CorpusLine> read_corpus(std::istream& in);
std::map<std::string, Annotation> read_annotations(std::istream& in);

struct FilterResult {
  std::vector<CorpusRecord> kept;
  std::vector<std::pair<std::string, QcVerdict>> verdicts;  // id (or line number) and verdict
  QcReport report;
};

FilterResult filter_corpus(const std::vector<CorpusLine>& lines, const std::map<std::string, Annotation>& anns,
                           const FilterOptions& options = {});

struct SftMessage {
  std::string role;  // system, user, assistant, tool
  std::string content;
  bool operator==(const SftMessage&) const = default;
};

struct SftRecord {
  std::string id;
  traj::TaskKind task = traj::TaskKind::count;
  std::string question;
  std::vector<std::string> images;  // "<id>/<view>.png" in order of appearance
  std::vector<SftMessage> messages;
  bool operator==(const SftRecord&) const = default;
};

inline constexpr const char* kImageToken = "<image>";

SftRecord to_sft(const CorpusRecord& r, const std::string& system_prompt);
// Rebuilds the corpus record from an SFT record.
CorpusRecord from_sft(const SftRecord& s);

void export_sft(const std::vector<CorpusRecord>& records, std::ostream& out, const std::string& system_prompt);
std::vector<SftRecord> import_sft(std::istream& in);
nlohmann::json to_json(const SftRecord& s);
SftRecord sft_from_json(const nlohmann::json& j);

}  // namespace zt::corpus
