#pragma once

// Interleaved trajectory grammar: <think>, <tool_call>, <observation> and
// <answer> blocks, the bracketed sections inside think blocks, a canonical
// serializer, and the format-validity judgment.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "zoomtrace/geometry.hpp"

namespace zt::traj {

enum class TaskKind { count, grounding, choice, text, route };

const char* to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(std::string_view s);

// Four integers as written; range is checked by the consumer.
using BoxLiteral = std::array<long long, 4>;

std::string format_box(const BoxLiteral& b);

struct ChecklistItem {
  std::string id;
  std::string goal;
  std::optional<geo::NormBox> roi;
  bool done = false;
  std::vector<ChecklistItem> children;
  bool operator==(const ChecklistItem&) const = default;
};

enum class SectionKind { free_text, observation_note, plan, progress, final_aggregation };

const char* to_string(SectionKind kind);

struct ObjLine {
  std::string label;  // empty for the unlabeled "* Obj: [...]" form
  geo::NormBox box;
  bool operator==(const ObjLine&) const = default;
};

struct Section {
  SectionKind kind = SectionKind::free_text;
  std::string header;  // header line as written, empty for leading text
  std::string body;
  std::vector<ChecklistItem> items;  // plan / progress sections only
  std::vector<ObjLine> objs;
  bool operator==(const Section&) const = default;
};

// Canonical line forms used when authoring think text.
std::string render_item(const ChecklistItem& item, int depth);
std::string render_checklist(const std::vector<ChecklistItem>& items);
std::string render_obj(const ObjLine& obj);
const char* section_header(SectionKind kind);

struct ThinkBlock {
  std::string raw_text;
  std::vector<Section> sections;

  // Renders sections canonically into raw_text.
  static ThinkBlock from_sections(std::vector<Section> sections);
  const Section* find(SectionKind kind) const;
  bool operator==(const ThinkBlock&) const = default;
};

inline constexpr const char* kZoomToolName = "zoom_in";

struct ToolCall {
  std::string name;
  std::string source_image_id;
  BoxLiteral bbox{};
  bool operator==(const ToolCall&) const = default;
};

// System-authored turn announcing the current view.
struct Observation {
  std::string view_id;
  std::string text;

  static Observation make(const std::string& view_id, const std::string& frame_note);
  bool operator==(const Observation&) const = default;
};

struct Answer {
  TaskKind kind = TaskKind::text;
  std::variant<long long, BoxLiteral, char, std::string> payload;
  std::string raw;

  static Answer count(long long n);
  static Answer box(const BoxLiteral& b);
  static Answer choice(char letter);
  static Answer free_text(TaskKind kind, std::string text);

  bool operator==(const Answer&) const = default;
};

struct Step {
  std::variant<ThinkBlock, ToolCall, Observation, Answer> body;
  int turn_index = 0;

  bool model_authored() const { return !std::holds_alternative<Observation>(body); }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&body);
  }
  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::vector<Step> steps;

  const Answer* final_answer() const;
  int turn_count() const;
  std::size_t tool_call_count() const;
  bool operator==(const Trajectory&) const = default;
};

struct ParseError {
  enum class Kind {
    unclosed_tag,
    unexpected_tag,
    malformed_tool_json,
    non_numeric_obj,
    invalid_box,
    answer_mismatch,
    missing_view,
    too_long
  };
  Kind kind;
  std::size_t offset = 0;
  std::string message;
};

const char* to_string(ParseError::Kind kind);

struct ParseOptions {
  TaskKind task = TaskKind::count;
  std::size_t max_bytes = 65536;
  int first_turn = 0;
};

struct ParseResult {
  Trajectory trajectory;  // everything recognized before the first error
  std::vector<ParseError> errors;
  bool ok() const { return errors.empty(); }
};

ParseResult parse(std::string_view text, const ParseOptions& options = {});
std::string serialize(const Trajectory& t);
std::string serialize(const Step& s);

// Parses one think body into sections. Errors carry offsets relative to body
// start plus `base_offset`.
ThinkBlock parse_think(std::string_view body, std::size_t base_offset, std::vector<ParseError>& errors);
std::optional<Answer> parse_answer(std::string_view raw, TaskKind kind, std::string& why);
std::optional<ToolCall> parse_tool_call(std::string_view body, std::string& why);

// Tool schema as written in a prompt: bbox corners may be bare placeholder
// names instead of integers.
struct ToolTemplate {
  std::string name;
  std::vector<std::string> argument_keys;  // in document order
  std::string source_image_id;
  std::array<std::string, 4> bbox;  // corner names or integer text
};
std::optional<ToolTemplate> parse_tool_template(std::string_view body, std::string& why);

struct FormatReport {
  int r_fmt = 0;
  std::vector<std::string> diagnostics;
};

FormatReport validate_format(const Trajectory& t, TaskKind task);
FormatReport validate_format(const ParseResult& parsed, TaskKind task);

struct ObjRef {
  geo::NormBox box;
  std::string label;
  int turn_index = 0;
  std::size_t step_index = 0;
  SectionKind section = SectionKind::free_text;
  bool aggregation() const { return section == SectionKind::final_aggregation; }
};

std::vector<ObjRef> extract_obj_boxes(const Trajectory& t);

// Every "[a, b, c, d]" integer literal inside a think body.
struct LiteralRef {
  BoxLiteral box{};
  std::size_t offset = 0;
  SectionKind section = SectionKind::free_text;
};
std::vector<LiteralRef> find_box_literals(const ThinkBlock& think);

// Views reconstructed from the trajectory alone, in continuous global
// relative units. v0 is the whole frame.
struct ViewInfo {
  geo::RealBox region{0, 0, 1000, 1000};
  int depth = 0;
  std::string parent;
  int opened_turn = 0;  // turn whose observation first showed the view
};
using ViewMap = std::map<std::string, ViewInfo>;

inline constexpr const char* kGlobalViewId = "v0";

ViewMap derive_views(const Trajectory& t);
// View the model is looking at while authoring step i.
std::string current_view_at(const Trajectory& t, std::size_t step_index);

}  // namespace zt::traj
