#include "zoomtrace/trajectory.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>

namespace zt::traj {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// "a, b, c, d" -> four integers.
std::optional<BoxLiteral> parse_box_body(std::string_view inner) {
  BoxLiteral out{};
  std::size_t n = 0;
  while (true) {
    auto comma = inner.find(',');
    auto piece = inner.substr(0, comma);
    if (n == 4) return std::nullopt;
    auto v = parse_int(piece);
    if (!v) return std::nullopt;
    out[n++] = *v;
    if (comma == std::string_view::npos) break;
    inner.remove_prefix(comma + 1);
  }
  if (n != 4) return std::nullopt;
  return out;
}

std::optional<SectionKind> match_header(std::string_view line) {
  auto t = trim(line);
  if (t.size() < 3 || t.front() != '[') return std::nullopt;
  auto close = t.find(']');
  if (close == std::string_view::npos) return std::nullopt;
  auto name = lower(trim(t.substr(1, close - 1)));
  if (name == "plan") return SectionKind::plan;
  if (name == "progress" || name == "track") return SectionKind::progress;
  if (name == "final aggregation") return SectionKind::final_aggregation;
  if (name == "observation") return SectionKind::observation_note;
  return std::nullopt;
}

// Header token: from the opening '[' through the first ']'.
std::string_view header_token(std::string_view line) {
  auto open = line.find('[');
  return line.substr(open, line.find(']', open) - open + 1);
}

struct ObjMatch {
  bool is_obj = false;
  std::string label;
  std::string_view inner;  // text between the box brackets
  std::size_t inner_offset = 0;
};

// "* Obj: [..]", "- Obj (ship): [..]", "Obj: [..]".
ObjMatch match_obj(std::string_view line) {
  ObjMatch m;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  };
  skip_ws();
  if (i < line.size() && (line[i] == '*' || line[i] == '-')) {
    ++i;
    skip_ws();
  }
  if (line.size() - i < 3 || lower(line.substr(i, 3)) != "obj") return m;
  i += 3;
  skip_ws();
  std::string label;
  if (i < line.size() && line[i] == '(') {
    auto close = line.find(')', i);
    if (close == std::string_view::npos) return m;
    label = std::string(trim(line.substr(i + 1, close - i - 1)));
    i = close + 1;
    skip_ws();
  }
  if (i >= line.size() || line[i] != ':') return m;
  ++i;
  skip_ws();
  if (i >= line.size() || line[i] != '[') return m;
  auto close = line.find(']', i);
  if (close == std::string_view::npos) {
    m.is_obj = true;
    m.label = label;
    m.inner = line.substr(i + 1);
    m.inner_offset = i + 1;
    return m;
  }
  m.is_obj = true;
  m.label = label;
  m.inner = line.substr(i + 1, close - i - 1);
  m.inner_offset = i + 1;
  return m;
}

struct CheckMatch {
  bool is_item = false;
  std::size_t indent = 0;
  bool done = false;
  std::string_view rest;
};

CheckMatch match_checkbox(std::string_view line) {
  CheckMatch m;
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
    m.indent += line[i] == '\t' ? 2 : 1;
    ++i;
  }
  if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
    ++i;
    while (i < line.size() && line[i] == ' ') ++i;
  }
  if (line.size() - i < 3 || line[i] != '[' || line[i + 2] != ']') return m;
  char mark = line[i + 1];
  if (mark != ' ' && mark != 'x' && mark != 'X') return m;
  m.is_item = true;
  m.done = mark != ' ';
  m.rest = trim(line.substr(i + 3));
  return m;
}

// Last "[a, b, c, d]" literal in s, returned with its position.
std::optional<std::pair<BoxLiteral, std::size_t>> last_box_literal(std::string_view s) {
  auto close = s.rfind(']');
  while (close != std::string_view::npos) {
    auto open = s.rfind('[', close);
    if (open == std::string_view::npos) break;
    if (auto b = parse_box_body(s.substr(open + 1, close - open - 1))) return std::make_pair(*b, open);
    if (open == 0) break;
    close = s.rfind(']', open - 1);
  }
  return std::nullopt;
}

struct RawItem {
  std::size_t indent;
  ChecklistItem item;
};

// Builds the nested tree from indentation.
std::vector<ChecklistItem> nest(std::vector<RawItem> flat) {
  std::vector<ChecklistItem> roots;
  std::vector<std::pair<std::size_t, ChecklistItem*>> stack;
  for (auto& r : flat) {
    while (!stack.empty() && stack.back().first >= r.indent) stack.pop_back();
    std::vector<ChecklistItem>& into = stack.empty() ? roots : stack.back().second->children;
    into.push_back(std::move(r.item));
    stack.emplace_back(r.indent, &into.back());
  }
  return roots;
}

}  // namespace

std::string render_item(const ChecklistItem& it, int depth) {
  std::string out(static_cast<std::size_t>(depth) * 2, ' ');
  out += "- [";
  out += it.done ? 'x' : ' ';
  out += "] ";
  out += it.id;
  if (!it.goal.empty()) out += ": " + it.goal;
  if (it.roi) out += " " + geo::to_string(*it.roi);
  for (const auto& c : it.children) out += "\n" + render_item(c, depth + 1);
  return out;
}

std::string render_checklist(const std::vector<ChecklistItem>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += render_item(items[i], 0);
  }
  return out;
}

std::string render_obj(const ObjLine& o) {
  std::string out = "* Obj";
  if (!o.label.empty()) out += " (" + o.label + ")";
  return out + ": " + geo::to_string(o.box);
}

const char* section_header(SectionKind kind) {
  switch (kind) {
    case SectionKind::free_text: return "";
    case SectionKind::observation_note: return "[Observation]";
    case SectionKind::plan: return "[PLAN]";
    case SectionKind::progress: return "[PROGRESS]";
    case SectionKind::final_aggregation: return "[FINAL AGGREGATION]";
  }
  return "";
}

namespace {

struct TagSpec {
  std::string_view open;
  std::string_view close;
};

constexpr TagSpec kThink{"<think>", "</think>"};
constexpr TagSpec kTool{"<tool_call>", "</tool_call>"};
constexpr TagSpec kAnswer{"<answer>", "</answer>"};
constexpr TagSpec kObservation{"<observation>", "</observation>"};

}  // namespace

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::count: return "count";
    case TaskKind::grounding: return "grounding";
    case TaskKind::choice: return "choice";
    case TaskKind::text: return "text";
    case TaskKind::route: return "route";
  }
  return "?";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s) {
  auto l = lower(trim(s));
  if (l == "count" || l == "counting") return TaskKind::count;
  if (l == "grounding") return TaskKind::grounding;
  if (l == "choice") return TaskKind::choice;
  if (l == "text") return TaskKind::text;
  if (l == "route") return TaskKind::route;
  return std::nullopt;
}

const char* to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::free_text: return "free_text";
    case SectionKind::observation_note: return "observation";
    case SectionKind::plan: return "plan";
    case SectionKind::progress: return "progress";
    case SectionKind::final_aggregation: return "final_aggregation";
  }
  return "?";
}

const char* to_string(ParseError::Kind kind) {
  using K = ParseError::Kind;
  switch (kind) {
    case K::unclosed_tag: return "unclosed_tag";
    case K::unexpected_tag: return "unexpected_tag";
    case K::malformed_tool_json: return "malformed_tool_json";
    case K::non_numeric_obj: return "non_numeric_obj";
    case K::invalid_box: return "invalid_box";
    case K::answer_mismatch: return "answer_mismatch";
    case K::missing_view: return "missing_view";
    case K::too_long: return "too_long";
  }
  return "?";
}

std::string format_box(const BoxLiteral& b) {
  std::ostringstream os;
  os << '[' << b[0] << ", " << b[1] << ", " << b[2] << ", " << b[3] << ']';
  return os.str();
}

ThinkBlock ThinkBlock::from_sections(std::vector<Section> sections) {
  ThinkBlock t;
  std::string raw;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) raw += '\n';
    const auto& s = sections[i];
    if (!s.header.empty()) {
      raw += s.header;
      raw += '\n';
    }
    raw += s.body;
  }
  t.raw_text = std::move(raw);
  t.sections = std::move(sections);
  return t;
}

const Section* ThinkBlock::find(SectionKind kind) const {
  for (const auto& s : sections) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

Observation Observation::make(const std::string& view_id, const std::string& frame_note) {
  Observation o;
  o.view_id = view_id;
  o.text = "[System Observation]\nCurrent View: " + view_id;
  if (!frame_note.empty()) o.text += "\n" + frame_note;
  return o;
}

Answer Answer::count(long long n) {
  return Answer{TaskKind::count, n, std::to_string(n)};
}

Answer Answer::box(const BoxLiteral& b) { return Answer{TaskKind::grounding, b, format_box(b)}; }

Answer Answer::choice(char letter) { return Answer{TaskKind::choice, letter, std::string(1, letter)}; }

Answer Answer::free_text(TaskKind kind, std::string text) {
  Answer a{kind, std::string(trim(text)), text};
  return a;
}

const Answer* Trajectory::final_answer() const {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (auto a = it->as<Answer>()) return a;
  }
  return nullptr;
}

int Trajectory::turn_count() const {
  int n = 0;
  for (const auto& s : steps) n = std::max(n, s.turn_index + 1);
  return n;
}

std::size_t Trajectory::tool_call_count() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const Step& s) { return s.as<ToolCall>() != nullptr; }));
}

ThinkBlock parse_think(std::string_view body, std::size_t base_offset, std::vector<ParseError>& errors) {
  ThinkBlock think;
  think.raw_text = std::string(body);

  struct Pending {
    Section section;
    std::vector<std::string_view> lines;
    std::vector<RawItem> items;
  };
  std::vector<Pending> out;
  Pending cur;
  bool have_header = false;

  auto flush = [&] {
    std::string b;
    for (std::size_t i = 0; i < cur.lines.size(); ++i) {
      if (i) b += '\n';
      b += cur.lines[i];
    }
    cur.section.body = std::move(b);
    cur.section.items = nest(std::move(cur.items));
    if (have_header || !is_blank(cur.section.body)) out.push_back(std::move(cur));
    cur = Pending{};
  };

  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    auto line = body.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::size_t line_off = base_offset + pos;

    if (auto kind = match_header(line)) {
      flush();
      have_header = true;
      cur.section.kind = *kind;
      auto tok = header_token(line);
      cur.section.header = std::string(tok);
      auto tail = trim(line.substr(line.find(tok) + tok.size()));
      if (!tail.empty()) cur.lines.push_back(tail);
    } else {
      cur.lines.push_back(line);
      auto obj = match_obj(line);
      if (obj.is_obj) {
        auto box = parse_box_body(obj.inner);
        if (!box) {
          errors.push_back({ParseError::Kind::non_numeric_obj, line_off + obj.inner_offset,
                            "Obj line coordinates are not four integers: '" + std::string(trim(line)) + "'"});
        } else if (auto nb = geo::NormBox::try_make(*box)) {
          cur.section.objs.push_back(ObjLine{obj.label, *nb});
        } else {
          errors.push_back({ParseError::Kind::invalid_box, line_off + obj.inner_offset,
                            "Obj box " + format_box(*box) + " is outside the 0-1000 frame"});
        }
      } else if (cur.section.kind == SectionKind::plan || cur.section.kind == SectionKind::progress) {
        auto cb = match_checkbox(line);
        if (cb.is_item) {
          ChecklistItem item;
          item.done = cb.done;
          std::string_view label = cb.rest;
          if (auto lit = last_box_literal(cb.rest)) {
            if (auto nb = geo::NormBox::try_make(lit->first)) {
              item.roi = *nb;
            } else {
              errors.push_back({ParseError::Kind::invalid_box, line_off,
                                "checklist roi " + format_box(lit->first) + " is outside the 0-1000 frame"});
            }
            label = trim(cb.rest.substr(0, lit->second));
          }
          auto colon = label.find(':');
          if (colon != std::string_view::npos) {
            item.id = std::string(trim(label.substr(0, colon)));
            item.goal = std::string(trim(label.substr(colon + 1)));
          } else {
            item.id = std::string(label);
          }
          cur.items.push_back(RawItem{cb.indent, std::move(item)});
        }
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush();
  for (auto& p : out) think.sections.push_back(std::move(p.section));
  return think;
}

std::optional<Answer> parse_answer(std::string_view raw, TaskKind kind, std::string& why) {
  auto t = trim(raw);
  Answer a;
  a.kind = kind;
  a.raw = std::string(raw);
  switch (kind) {
    case TaskKind::count: {
      auto v = parse_int(t);
      if (!v || *v < 0) {
        why = "count answer must be a nonnegative integer, got '" + std::string(t) + "'";
        return std::nullopt;
      }
      a.payload = *v;
      return a;
    }
    case TaskKind::grounding: {
      if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
        why = "grounding answer must be a [x1, y1, x2, y2] box";
        return std::nullopt;
      }
      auto b = parse_box_body(t.substr(1, t.size() - 2));
      if (!b) {
        why = "grounding answer box is not four integers";
        return std::nullopt;
      }
      a.payload = *b;
      return a;
    }
    case TaskKind::choice: {
      if (t.size() != 1 || t[0] < 'A' || t[0] > 'D') {
        why = "choice answer must be a single letter A-D, got '" + std::string(t) + "'";
        return std::nullopt;
      }
      a.payload = t[0];
      return a;
    }
    case TaskKind::text:
    case TaskKind::route:
      a.payload = std::string(t);
      return a;
  }
  why = "unknown task kind";
  return std::nullopt;
}

std::optional<ToolCall> parse_tool_call(std::string_view body, std::string& why) {
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    why = "tool call body is not a JSON object";
    return std::nullopt;
  }
  auto name = j.find("name");
  auto args = j.find("arguments");
  if (name == j.end() || !name->is_string()) {
    why = "tool call lacks a string \"name\"";
    return std::nullopt;
  }
  if (args == j.end() || !args->is_object()) {
    why = "tool call lacks an \"arguments\" object";
    return std::nullopt;
  }
  auto id = args->find("source_image_id");
  auto bbox = args->find("bbox");
  if (id == args->end() || !id->is_string()) {
    why = "tool call lacks a string \"source_image_id\"";
    return std::nullopt;
  }
  if (bbox == args->end() || !bbox->is_array() || bbox->size() != 4) {
    why = "tool call \"bbox\" must be an array of four integers";
    return std::nullopt;
  }
  ToolCall tc;
  tc.name = name->get<std::string>();
  tc.source_image_id = id->get<std::string>();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& v = (*bbox)[i];
    if (!v.is_number_integer()) {
      why = "tool call \"bbox\" must be an array of four integers";
      return std::nullopt;
    }
    tc.bbox[i] = v.get<long long>();
  }
  return tc;
}

std::optional<ToolTemplate> parse_tool_template(std::string_view body, std::string& why) {
  // Quote bare identifiers inside the bbox array so the body becomes JSON.
  static const std::regex bbox_re(R"re(("bbox"\s*:\s*)\[([^\]]*)\])re");
  static const std::regex ident_re(R"re(\b([A-Za-z_][A-Za-z0-9_]*)\b)re");
  std::string text(body);
  std::smatch m;
  if (std::regex_search(text, m, bbox_re)) {
    const std::string inner = std::regex_replace(m[2].str(), ident_re, "\"$1\"");
    text = m.prefix().str() + m[1].str() + "[" + inner + "]" + m.suffix().str();
  }
  auto j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    why = "tool schema is not a JSON object";
    return std::nullopt;
  }
  if (!j.contains("name") || !j["name"].is_string() || !j.contains("arguments") || !j["arguments"].is_object()) {
    why = "tool schema lacks \"name\" or \"arguments\"";
    return std::nullopt;
  }
  ToolTemplate t;
  t.name = j["name"].get<std::string>();
  const auto& args = j["arguments"];
  for (auto it = args.begin(); it != args.end(); ++it) t.argument_keys.push_back(it.key());
  if (!args.contains("source_image_id") || !args["source_image_id"].is_string()) {
    why = "tool schema lacks a string \"source_image_id\"";
    return std::nullopt;
  }
  t.source_image_id = args["source_image_id"].get<std::string>();
  if (!args.contains("bbox") || !args["bbox"].is_array() || args["bbox"].size() != 4) {
    why = "tool schema \"bbox\" must have four corners";
    return std::nullopt;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& v = args["bbox"][i];
    t.bbox[i] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return t;
}

ParseResult parse(std::string_view text, const ParseOptions& options) {
  ParseResult r;
  if (text.size() > options.max_bytes) {
    r.errors.push_back({ParseError::Kind::too_long, options.max_bytes,
                        "trajectory exceeds " + std::to_string(options.max_bytes) + " bytes"});
    return r;
  }
  int turn = options.first_turn;
  std::size_t pos = 0;
  const TagSpec* tags[] = {&kThink, &kTool, &kAnswer, &kObservation};

  while (pos < text.size()) {
    auto lt = text.find('<', pos);
    if (lt == std::string_view::npos) break;
    const TagSpec* hit = nullptr;
    for (auto* t : tags) {
      if (text.substr(lt, t->open.size()) == t->open) {
        hit = t;
        break;
      }
    }
    if (!hit) {
      for (auto* t : tags) {
        if (text.substr(lt, t->close.size()) == t->close) {
          r.errors.push_back({ParseError::Kind::unexpected_tag, lt,
                              "closing tag " + std::string(t->close) + " without an opening tag"});
          return r;
        }
      }
      pos = lt + 1;
      continue;
    }
    const std::size_t body_start = lt + hit->open.size();
    const auto close = text.find(hit->close, body_start);
    if (close == std::string_view::npos) {
      r.errors.push_back({ParseError::Kind::unclosed_tag, lt, std::string(hit->open) + " is never closed"});
      return r;
    }
    const auto body = text.substr(body_start, close - body_start);
    pos = close + hit->close.size();

    if (hit == &kThink) {
      std::vector<ParseError> errs;
      auto think = parse_think(body, body_start, errs);
      if (!errs.empty()) {
        r.errors.insert(r.errors.end(), errs.begin(), errs.end());
        return r;
      }
      r.trajectory.steps.push_back(Step{std::move(think), turn});
    } else if (hit == &kTool) {
      std::string why;
      auto tc = parse_tool_call(body, why);
      if (!tc) {
        r.errors.push_back({ParseError::Kind::malformed_tool_json, body_start, why});
        return r;
      }
      r.trajectory.steps.push_back(Step{std::move(*tc), turn});
    } else if (hit == &kAnswer) {
      std::string why;
      auto a = parse_answer(body, options.task, why);
      if (!a) {
        r.errors.push_back({ParseError::Kind::answer_mismatch, body_start, why});
        return r;
      }
      r.trajectory.steps.push_back(Step{std::move(*a), turn});
    } else {
      Observation obs;
      obs.text = std::string(body);
      static constexpr std::string_view kKey = "Current View:";
      auto k = body.find(kKey);
      if (k == std::string_view::npos) {
        r.errors.push_back({ParseError::Kind::missing_view, body_start, "observation has no 'Current View:' line"});
        return r;
      }
      auto rest = body.substr(k + kKey.size());
      obs.view_id = std::string(trim(rest.substr(0, rest.find('\n'))));
      ++turn;
      r.trajectory.steps.push_back(Step{std::move(obs), turn});
    }
  }
  return r;
}

std::string serialize(const Step& s) {
  if (auto t = s.as<ThinkBlock>()) return "<think>" + t->raw_text + "</think>";
  if (auto tc = s.as<ToolCall>()) {
    std::string out = "<tool_call>{\"name\": ";
    out += json(tc->name).dump();
    out += ", \"arguments\": {\"source_image_id\": ";
    out += json(tc->source_image_id).dump();
    out += ", \"bbox\": " + format_box(tc->bbox) + "}}</tool_call>";
    return out;
  }
  if (auto o = s.as<Observation>()) return "<observation>" + o->text + "</observation>";
  const auto& a = std::get<Answer>(s.body);
  return "<answer>" + a.raw + "</answer>";
}

std::string serialize(const Trajectory& t) {
  std::string out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (i) out += '\n';
    out += serialize(t.steps[i]);
  }
  return out;
}

FormatReport validate_format(const Trajectory& t, TaskKind task) {
  FormatReport rep;
  auto& d = rep.diagnostics;

  struct TurnTally {
    int tools = 0;
    int answers = 0;
    int model_steps = 0;
  };
  std::map<int, TurnTally> turns;
  std::map<int, bool> saw_think;

  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (!s.model_authored()) continue;
    auto& tally = turns[s.turn_index];
    ++tally.model_steps;
    if (s.as<ThinkBlock>()) saw_think[s.turn_index] = true;
    if (auto tc = s.as<ToolCall>()) {
      ++tally.tools;
      if (!saw_think[s.turn_index]) {
        d.push_back("turn " + std::to_string(s.turn_index) + ": tool call is not preceded by a think block");
      }
      if (tc->name != kZoomToolName) {
        d.push_back("turn " + std::to_string(s.turn_index) + ": unknown tool '" + tc->name + "'");
      }
      if (!geo::NormBox::valid(tc->bbox[0], tc->bbox[1], tc->bbox[2], tc->bbox[3])) {
        d.push_back("turn " + std::to_string(s.turn_index) + ": tool bbox " + format_box(tc->bbox) +
                    " is outside the 0-1000 frame");
      }
    }
    if (s.as<Answer>()) ++tally.answers;
  }

  for (const auto& [turn, tally] : turns) {
    const auto tn = "turn " + std::to_string(turn);
    if (tally.tools > 0 && tally.answers > 0) d.push_back(tn + ": contains both a tool call and an answer");
    if (tally.tools > 1) d.push_back(tn + ": " + std::to_string(tally.tools) + " tool calls in one turn");
    if (tally.answers > 1) d.push_back(tn + ": " + std::to_string(tally.answers) + " answers in one turn");
    if (tally.tools == 0 && tally.answers == 0) d.push_back(tn + ": no action");
  }

  const Answer* answer = nullptr;
  for (const auto& s : t.steps) {
    if (auto a = s.as<Answer>()) answer = a;
  }
  if (!answer) {
    d.push_back("no final answer");
  } else {
    if (!t.steps.back().as<Answer>()) d.push_back("answer is not the last step");
    if (answer->kind != task) {
      d.push_back(std::string("answer typed as ") + to_string(answer->kind) + " but task is " + to_string(task));
    } else if (auto b = std::get_if<BoxLiteral>(&answer->payload)) {
      if (!geo::NormBox::valid((*b)[0], (*b)[1], (*b)[2], (*b)[3])) {
        d.push_back("grounding answer " + format_box(*b) + " is outside the 0-1000 frame");
      }
    }
  }
  rep.r_fmt = d.empty() ? 1 : 0;
  return rep;
}

FormatReport validate_format(const ParseResult& parsed, TaskKind task) {
  if (!parsed.ok()) {
    FormatReport rep;
    for (const auto& e : parsed.errors) {
      rep.diagnostics.push_back(std::string("parse error (") + to_string(e.kind) + ") at byte " +
                                std::to_string(e.offset) + ": " + e.message);
    }
    return rep;
  }
  return validate_format(parsed.trajectory, task);
}

std::vector<ObjRef> extract_obj_boxes(const Trajectory& t) {
  std::vector<ObjRef> out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    auto think = t.steps[i].as<ThinkBlock>();
    if (!think) continue;
    for (const auto& sec : think->sections) {
      for (const auto& o : sec.objs) {
        out.push_back(ObjRef{o.box, o.label, t.steps[i].turn_index, i, sec.kind});
      }
    }
  }
  return out;
}

std::vector<LiteralRef> find_box_literals(const ThinkBlock& think) {
  std::vector<LiteralRef> out;
  std::size_t base = 0;
  for (const auto& sec : think.sections) {
    std::string_view body = sec.body;
    std::size_t pos = 0;
    while (true) {
      auto open = body.find('[', pos);
      if (open == std::string_view::npos) break;
      auto close = body.find(']', open);
      if (close == std::string_view::npos) break;
      if (auto b = parse_box_body(body.substr(open + 1, close - open - 1))) {
        out.push_back(LiteralRef{*b, base + open, sec.kind});
        pos = close + 1;
      } else {
        pos = open + 1;
      }
    }
    base += sec.header.size() + body.size() + 2;
  }
  return out;
}

ViewMap derive_views(const Trajectory& t) {
  ViewMap views;
  views[kGlobalViewId] = ViewInfo{};
  const ToolCall* pending = nullptr;
  for (const auto& s : t.steps) {
    if (auto tc = s.as<ToolCall>()) {
      pending = tc;
    } else if (auto obs = s.as<Observation>()) {
      if (pending && !views.count(obs->view_id)) {
        auto src = views.find(pending->source_image_id);
        auto nb = geo::NormBox::try_make(pending->bbox);
        if (src != views.end() && nb) {
          ViewInfo v;
          v.region = geo::compose_real(geo::to_real(*nb), src->second.region);
          v.depth = src->second.depth + 1;
          v.parent = pending->source_image_id;
          v.opened_turn = s.turn_index;
          views[obs->view_id] = v;
        }
      }
      pending = nullptr;
    }
  }
  return views;
}

std::string current_view_at(const Trajectory& t, std::size_t step_index) {
  for (std::size_t i = std::min(step_index, t.steps.size()); i-- > 0;) {
    if (auto obs = t.steps[i].as<Observation>()) return obs->view_id;
  }
  return kGlobalViewId;
}

}  // namespace zt::traj
