#include "zoomtrace/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "zoomtrace/prompts.hpp"

namespace zt::corpus {

namespace {

std::string trim_lower(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  const auto b = s.find_last_not_of(" \t\r\n");
  s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

geo::NormBox quadrant(const geo::NormBox& r, int q) {
  const int mx = (r.x1 + r.x2) / 2;
  const int my = (r.y1 + r.y2) / 2;
  switch (q) {
    case 0: return {r.x1, r.y1, mx, my};
    case 1: return {mx, r.y1, r.x2, my};
    case 2: return {r.x1, my, mx, r.y2};
    default: return {mx, my, r.x2, r.y2};
  }
}

// Quadrant of a point; centres on a split line go right/down.
int quadrant_of(const geo::NormBox& r, double cx, double cy) {
  const double mx = (r.x1 + r.x2) / 2;
  const double my = (r.y1 + r.y2) / 2;
  return (cx >= mx ? 1 : 0) + (cy >= my ? 2 : 0);
}

traj::ChecklistItem to_item(const ChecklistNode& n) {
  traj::ChecklistItem it;
  it.id = n.id;
  it.goal = "verify " + std::to_string(n.targets.size()) + " target(s)";
  it.roi = n.region;
  for (const auto& c : n.children) it.children.push_back(to_item(c));
  return it;
}

bool plan_mandatory(traj::TaskKind task) { return task == traj::TaskKind::count; }

}  // namespace

std::size_t Checklist::leaf_count() const {
  std::function<std::size_t(const ChecklistNode&)> count = [&](const ChecklistNode& n) -> std::size_t {
    if (n.leaf()) return 1;
    std::size_t s = 0;
    for (const auto& c : n.children) s += count(c);
    return s;
  };
  return count(root);
}

int Checklist::depth() const {
  std::function<int(const ChecklistNode&)> d = [&](const ChecklistNode& n) {
    int m = 0;
    for (const auto& c : n.children) m = std::max(m, 1 + d(c));
    return m;
  };
  return d(root);
}

std::vector<traj::ChecklistItem> Checklist::items() const {
  std::vector<traj::ChecklistItem> out;
  for (const auto& c : root.children) out.push_back(to_item(c));
  return out;
}

Checklist compile_checklist(const Annotation& ann, std::size_t q_max) {
  Checklist cl;
  cl.root.id = "root";
  cl.root.region = geo::kFullFrame;
  if (ann.boxes.empty()) return cl;

  std::vector<std::pair<double, double>> centres;
  for (const auto& b : ann.boxes) {
    const auto r = ann.to_relative(b.box);
    centres.emplace_back((r.x1 + r.x2) / 2.0, (r.y1 + r.y2) / 2.0);
  }
  auto split = [&](ChecklistNode& node, const std::vector<std::size_t>& members, const std::string& prefix) {
    std::vector<std::size_t> groups[4];
    for (auto i : members) groups[quadrant_of(node.region, centres[i].first, centres[i].second)].push_back(i);
    for (int q = 0; q < 4; ++q) {
      if (groups[q].empty()) continue;
      ChecklistNode c;
      c.id = prefix + std::to_string(q + 1);
      c.region = quadrant(node.region, q);
      c.targets = groups[q];
      node.children.push_back(std::move(c));
    }
  };
  std::vector<std::size_t> all(ann.boxes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  split(cl.root, all, "q");
  for (auto& c : cl.root.children) {
    if (c.targets.size() > q_max) {
      split(c, c.targets, c.id + ".");
      c.targets.clear();
    }
  }
  return cl;
}

std::vector<LeakFlag> detect_leakage(const traj::Trajectory& t, const Annotation& ann, double threshold) {
  return detect_leakage(t, ann, traj::derive_views(t), threshold);
}

std::vector<LeakFlag> detect_leakage(const traj::Trajectory& t, const Annotation& ann, const traj::ViewMap& views,
                                     double threshold) {
  std::vector<geo::RealBox> oracle;
  for (const auto& b : ann.boxes) oracle.push_back(geo::to_real(ann.to_relative(b.box)));

  // Step at which each oracle box first became visible at useful resolution.
  constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> revealed(oracle.size(), kNever);
  if (t.tool_call_count() == 0) {
    std::fill(revealed.begin(), revealed.end(), 0);
  } else {
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const auto* obs = t.steps[i].as<traj::Observation>();
      if (!obs) continue;
      auto v = views.find(obs->view_id);
      if (v == views.end()) continue;
      for (std::size_t k = 0; k < oracle.size(); ++k) {
        if (revealed[k] == kNever && geo::contains(v->second.region, oracle[k], 1.0)) revealed[k] = i;
      }
    }
  }

  std::vector<LeakFlag> flags;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto* think = t.steps[i].as<traj::ThinkBlock>();
    if (!think) continue;
    const auto view = views.find(traj::current_view_at(t, i));
    for (const auto& lit : traj::find_box_literals(*think)) {
      const auto nb = geo::NormBox::try_make(lit.box);
      if (!nb) continue;
      geo::RealBox g = geo::to_real(*nb);
      if (lit.section != traj::SectionKind::final_aggregation && view != views.end()) {
        g = geo::compose_real(g, view->second.region);
      }
      std::optional<LeakFlag> best;
      for (std::size_t k = 0; k < oracle.size(); ++k) {
        if (i < revealed[k] || revealed[k] == kNever) {
          const double v = geo::iou(g, oracle[k]);
          if (v >= threshold && (!best || v > best->iou)) {
            best = LeakFlag{i, t.steps[i].turn_index, lit.box, g, k, v};
          }
        }
      }
      if (best) flags.push_back(*best);
    }
  }
  return flags;
}

GateResult validate_structure(const traj::Trajectory& t, traj::TaskKind task, const std::string& prompt_asset) {
  GateResult g;
  auto fail = [&](std::string why) {
    g.pass = false;
    g.problems.push_back(std::move(why));
  };

  int prev_turn = -1;
  std::size_t plans = 0;
  bool planned = false;
  bool warned_unplanned = false;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.model_authored() && s.turn_index != prev_turn) {
      if (!s.as<traj::ThinkBlock>()) fail("turn " + std::to_string(s.turn_index) + " does not open with <think>");
      prev_turn = s.turn_index;
    }
    if (const auto* th = s.as<traj::ThinkBlock>()) {
      for (const auto& sec : th->sections) {
        if (sec.kind != traj::SectionKind::plan) continue;
        if (++plans == 2) fail("[PLAN] emitted again in turn " + std::to_string(s.turn_index));
        planned = true;
      }
    } else if (s.as<traj::ToolCall>()) {
      const bool next_is_obs = i + 1 < t.steps.size() && t.steps[i + 1].as<traj::Observation>();
      if (!next_is_obs) fail("tool call at step " + std::to_string(i) + " is not followed by an observation");
      if (plan_mandatory(task) && !planned && !warned_unplanned) {
        fail("zoom before any [PLAN]");
        warned_unplanned = true;
      }
    } else if (s.as<traj::Observation>()) {
      if (i == 0 || !t.steps[i - 1].as<traj::ToolCall>()) {
        fail("observation at step " + std::to_string(i) + " does not follow a tool call");
      }
    }
  }

  const std::string asset = prompt_asset.empty() ? std::string(prompts::default_task_asset(task)) : prompt_asset;
  const int cap = prompts::layer_cap(asset);
  int deepest = 0;
  for (const auto& [id, v] : traj::derive_views(t)) deepest = std::max(deepest, v.depth);
  if (deepest > cap) {
    fail("zoom depth " + std::to_string(deepest) + " exceeds the " + std::to_string(cap) + "-layer cap of '" + asset +
         "'");
  }
  return g;
}

GateResult self_consistency(const traj::Trajectory& t, const Annotation& ann) {
  GateResult g;
  const auto* ans = t.final_answer();
  const auto gold = ann.gold_answer();
  if (!gold) return g;
  if (!ans) {
    g.pass = false;
    g.problems.push_back("no final answer");
    return g;
  }
  bool ok = false;
  std::string detail;
  switch (ann.task) {
    case traj::TaskKind::count: {
      const auto* a = std::get_if<long long>(&ans->payload);
      const auto gv = std::get<long long>(gold->payload);
      ok = a && *a == gv;
      detail = "answer " + ans->raw + " vs gold " + std::to_string(gv);
      break;
    }
    case traj::TaskKind::choice: {
      const auto* a = std::get_if<char>(&ans->payload);
      ok = a && *a == std::get<char>(gold->payload);
      detail = "answer " + ans->raw + " vs gold " + gold->raw;
      break;
    }
    case traj::TaskKind::grounding: {
      const auto* a = std::get_if<traj::BoxLiteral>(&ans->payload);
      const auto pa = a ? geo::NormBox::try_make(*a) : std::nullopt;
      const auto pg = geo::NormBox::try_make(std::get<traj::BoxLiteral>(gold->payload));
      const double v = pa && pg ? geo::iou(*pa, *pg) : 0.0;
      ok = v >= 0.5;
      char buf[64];
      std::snprintf(buf, sizeof buf, "iou %.4f vs gold", v);
      detail = buf;
      break;
    }
    default:
      ok = trim_lower(ans->raw) == trim_lower(gold->raw);
      detail = "answer '" + ans->raw + "' vs gold '" + gold->raw + "'";
      break;
  }
  if (!ok) {
    g.pass = false;
    g.problems.push_back(detail);
  }
  return g;
}

const char* to_string(Reason r) {
  switch (r) {
    case Reason::overlap: return "overlap";
    case Reason::syntax: return "syntax";
    case Reason::structure: return "structure";
    case Reason::leakage: return "leakage";
    case Reason::inconsistency: return "inconsistency";
  }
  return "?";
}

nlohmann::json to_json(const CorpusRecord& r) {
  nlohmann::json j{{"id", r.id}, {"task", traj::to_string(r.task)}, {"question", r.question}, {"trajectory", r.trajectory}};
  if (!r.prompt_asset.empty()) j["prompt_asset"] = r.prompt_asset;
  return j;
}

CorpusRecord corpus_record_from_json(const nlohmann::json& j) {
  CorpusRecord r;
  r.id = j.at("id").get<std::string>();
  const auto task = traj::task_kind_from_string(j.at("task").get<std::string>());
  if (!task) throw std::invalid_argument("unknown task kind '" + j.at("task").get<std::string>() + "'");
  r.task = *task;
  r.question = j.value("question", "");
  r.trajectory = j.at("trajectory").get<std::string>();
  r.prompt_asset = j.value("prompt_asset", "");
  return r;
}

std::string content_hash(const CorpusRecord& r) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(r.trajectory.data(), r.trajectory.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

QcVerdict qc_record(const CorpusRecord& r, const Annotation* ann, const FilterOptions& options) {
  QcVerdict v;
  auto drop = [&](Reason why, std::vector<std::string> details) {
    v.kept = false;
    v.reasons.push_back(why);
    v.details = std::move(details);
    return v;
  };
  if (options.blocklist.count(r.id) || options.blocklist.count(content_hash(r))) {
    return drop(Reason::overlap, {"record is on the benchmark blocklist"});
  }
  const auto parsed = traj::parse(r.trajectory, traj::ParseOptions{r.task, options.max_bytes, 0});
  const auto fmt = traj::validate_format(parsed, r.task);
  if (!fmt.r_fmt) return drop(Reason::syntax, fmt.diagnostics);
  const auto& t = parsed.trajectory;
  if (auto s = validate_structure(t, r.task, r.prompt_asset); !s.pass) return drop(Reason::structure, s.problems);
  if (!ann) return drop(Reason::inconsistency, {"no annotation for record '" + r.id + "'"});
  if (ann->task != r.task) return drop(Reason::inconsistency, {"annotation task does not match the record"});
  if (auto leaks = detect_leakage(t, *ann, options.leak_iou); !leaks.empty()) {
    std::vector<std::string> d;
    for (const auto& l : leaks) {
      d.push_back("turn " + std::to_string(l.turn_index) + " quotes " + traj::format_box(l.literal) +
                  " before observing oracle box " + std::to_string(l.oracle_index));
    }
    return drop(Reason::leakage, d);
  }
  if (auto c = self_consistency(t, *ann); !c.pass) return drop(Reason::inconsistency, c.problems);
  return v;
}

std::optional<double> QcReport::kept_ratio() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(kept) / static_cast<double>(total);
}

std::string QcReport::text() const {
  std::ostringstream os;
  os << "records: " << total << "\nkept: " << kept << "\nkept ratio: ";
  if (auto r = kept_ratio()) {
    os << *r;
  } else {
    os << "n/a";
  }
  os << "\ndropped:";
  for (Reason r : {Reason::overlap, Reason::syntax, Reason::structure, Reason::leakage, Reason::inconsistency}) {
    auto f = drops.find(r);
    os << ' ' << to_string(r) << '=' << (f == drops.end() ? 0 : f->second);
  }
  os << '\n';
  return os.str();
}

nlohmann::json QcReport::to_json() const {
  nlohmann::json d = nlohmann::json::object();
  for (Reason r : {Reason::overlap, Reason::syntax, Reason::structure, Reason::leakage, Reason::inconsistency}) {
    auto f = drops.find(r);
    d[to_string(r)] = f == drops.end() ? 0 : f->second;
  }
  const auto ratio = kept_ratio();
  return {{"total", total}, {"kept", kept}, {"kept_ratio", ratio ? nlohmann::json(*ratio) : nlohmann::json(nullptr)},
          {"drops", d}};
}

std::vector<CorpusLine> read_corpus(std::istream& in) {
  std::vector<CorpusLine> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CorpusLine cl;
    cl.raw = line;
    try {
      cl.record = corpus_record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      cl.error = e.what();
    }
    out.push_back(std::move(cl));
  }
  return out;
}

std::map<std::string, Annotation> read_annotations(std::istream& in) {
  std::map<std::string, Annotation> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto a = annotation_from_json(nlohmann::json::parse(line));
    if (a.id.empty()) throw std::invalid_argument("annotation on line " + std::to_string(n) + " has no id");
    out[a.id] = std::move(a);
  }
  return out;
}

FilterResult filter_corpus(const std::vector<CorpusLine>& lines, const std::map<std::string, Annotation>& anns,
                           const FilterOptions& options) {
  FilterResult res;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    ++res.report.total;
    QcVerdict v;
    std::string id = "line " + std::to_string(i + 1);
    if (!l.record) {
      v.kept = false;
      v.reasons.push_back(Reason::syntax);
      v.details.push_back("unreadable record: " + l.error);
    } else {
      id = l.record->id;
      auto a = anns.find(l.record->id);
      v = qc_record(*l.record, a == anns.end() ? nullptr : &a->second, options);
    }
    if (v.kept) {
      ++res.report.kept;
      res.kept.push_back(*l.record);
    } else {
      ++res.report.drops[v.reasons.front()];
    }
    res.verdicts.emplace_back(id, std::move(v));
  }
  return res;
}

SftRecord to_sft(const CorpusRecord& r, const std::string& system_prompt) {
  SftRecord s;
  s.id = r.id;
  s.task = r.task;
  s.question = r.question;
  if (!system_prompt.empty()) s.messages.push_back({"system", system_prompt});
  s.images.push_back(r.id + "/" + traj::kGlobalViewId + ".png");
  s.messages.push_back({"user", std::string(kImageToken) + r.question});

  const auto parsed = traj::parse(r.trajectory, traj::ParseOptions{r.task, std::string::npos, 0});
  std::string assistant;
  auto flush = [&] {
    if (!assistant.empty()) s.messages.push_back({"assistant", assistant});
    assistant.clear();
  };
  for (const auto& step : parsed.trajectory.steps) {
    if (const auto* o = step.as<traj::Observation>()) {
      flush();
      s.images.push_back(r.id + "/" + o->view_id + ".png");
      s.messages.push_back({"tool", std::string(kImageToken) + o->text});
    } else {
      if (!assistant.empty()) assistant += '\n';
      assistant += traj::serialize(step);
    }
  }
  flush();
  return s;
}

CorpusRecord from_sft(const SftRecord& s) {
  CorpusRecord r;
  r.id = s.id;
  r.task = s.task;
  r.question = s.question;
  std::string text;
  const std::string token = kImageToken;
  for (const auto& m : s.messages) {
    if (m.role != "assistant" && m.role != "tool") continue;
    if (!text.empty()) text += '\n';
    if (m.role == "assistant") {
      text += m.content;
    } else {
      const std::string body = m.content.rfind(token, 0) == 0 ? m.content.substr(token.size()) : m.content;
      text += traj::serialize(traj::Step{traj::Observation{"", body}, 0});
    }
  }
  r.trajectory = text;
  return r;
}

nlohmann::json to_json(const SftRecord& s) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : s.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"id", s.id}, {"task", traj::to_string(s.task)}, {"question", s.question}, {"images", s.images},
          {"messages", msgs}};
}

SftRecord sft_from_json(const nlohmann::json& j) {
  SftRecord s;
  s.id = j.at("id").get<std::string>();
  const auto task = traj::task_kind_from_string(j.at("task").get<std::string>());
  if (!task) throw std::invalid_argument("unknown task kind in SFT record");
  s.task = *task;
  s.question = j.value("question", "");
  s.images = j.at("images").get<std::vector<std::string>>();
  for (const auto& m : j.at("messages")) {
    s.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  }
  return s;
}

void export_sft(const std::vector<CorpusRecord>& records, std::ostream& out, const std::string& system_prompt) {
  for (const auto& r : records) {
    std::string sys = system_prompt;
    if (sys.empty()) {
      const auto asset = r.prompt_asset.empty() ? prompts::default_task_asset(r.task) : std::string_view(r.prompt_asset);
      sys = std::string(prompts::asset("system")) + "\n\n" + std::string(prompts::asset(asset));
    }
    out << to_json(to_sft(r, sys)).dump() << '\n';
  }
}

std::vector<SftRecord> import_sft(std::istream& in) {
  std::vector<SftRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(sft_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace zt::corpus
