#include "zoomtrace/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace zt::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  long long n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return n;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

struct Key {
  const char* name;
  const char* help;
  Setter set;
};

double* weight_slot(reward::RewardWeights& w, const std::string& k) {
  if (k == "w1") return &w.w1;
  if (k == "w2") return &w.w2;
  if (k == "w3") return &w.w3;
  if (k == "w4") return &w.w4;
  if (k == "alpha") return &w.alpha;
  if (k == "beta") return &w.beta;
  if (k == "gamma_fmt") return &w.gamma_fmt;
  if (k == "gamma_plan") return &w.gamma_plan;
  if (k == "lambda_c") return &w.lambda_c;
  if (k == "lambda_g") return &w.lambda_g;
  return nullptr;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"scene", "scene path (.scene text spec or PNG/JPEG/TIFF raster)",
       [](RunConfig& c, const std::string&, const std::string& v) { c.scene = v; }},
      {"task", "count | grounding | choice | text | route",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         auto t = traj::task_kind_from_string(v);
         if (!t) throw ConfigError(k + ": unknown task '" + v + "'");
         c.episode.task = *t;
       }},
      {"question", "question text", [](RunConfig& c, const std::string&, const std::string& v) { c.question = v; }},
      {"label", "target label for counting and grounding",
       [](RunConfig& c, const std::string&, const std::string& v) { c.episode.target_label = v; }},
      {"backend", "heuristic | remote | replay:<file>",
       [](RunConfig& c, const std::string&, const std::string& v) { c.backend = v; }},
      {"out", "output directory", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"gt", "ground-truth annotation JSON", [](RunConfig& c, const std::string&, const std::string& v) { c.gt = v; }},
      {"group", "episodes per group", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.group = static_cast<int>(to_int(k, v));
       }},
      {"seed", "episode seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.seed = static_cast<std::uint64_t>(to_int(k, v));
       }},
      {"budget", "maximum zoom_in calls per episode", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.budget.max_tool_calls = static_cast<int>(to_int(k, v));
       }},
      {"max_depth", "maximum zoom layers below the global view",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.budget.max_depth = static_cast<int>(to_int(k, v));
       }},
      {"max_pixels", "pixel budget of one rendered view", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.max_pixels = static_cast<std::size_t>(to_int(k, v));
       }},
      {"max_turns", "maximum model turns", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.max_turns = static_cast<int>(to_int(k, v));
       }},
      {"max_bytes", "maximum accepted turn text length", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.max_bytes = static_cast<std::size_t>(to_int(k, v));
       }},
      {"prompt_asset", "task prompt asset name (empty: task default)",
       [](RunConfig& c, const std::string&, const std::string& v) { c.episode.prompt_asset = v; }},
      {"plan_max_items", "checklist size limit K", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.plan.max_items = static_cast<std::size_t>(to_int(k, v));
       }},
      {"plan_max_child_depth", "deepest sub-plan level", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.plan.max_child_depth = static_cast<int>(to_int(k, v));
       }},
      {"plan_coverage", "fraction of an item roi a zoom must cover",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.plan.coverage_threshold = to_double(k, v);
       }},
      {"dedup", "merge duplicate evidence across crops", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.episode.dedup = to_bool(k, v);
       }},
      {"dedup_iou", "iou above which same-label evidence merges",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.episode.dedup_iou = to_double(k, v); }},
      {"obj_frame", "frame of local Obj lines: current_view | global",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "current_view") {
           c.episode.obj_frame = evidence::ObjFrame::current_view;
         } else if (v == "global") {
           c.episode.obj_frame = evidence::ObjFrame::global;
         } else {
           throw ConfigError(k + ": expected current_view or global, got '" + v + "'");
         }
       }},
      {"inject_evidence", "append an evidence summary to each observation",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.episode.inject_evidence = to_bool(k, v); }},
      {"shuffle", "heuristic backend visits quadrants in seeded order",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.shuffle = to_bool(k, v); }},
      {"endpoint", "remote chat-completions URL",
       [](RunConfig& c, const std::string&, const std::string& v) { c.remote.endpoint = v; }},
      {"model", "remote model name", [](RunConfig& c, const std::string&, const std::string& v) { c.remote.model = v; }},
      {"retries", "remote retries after the first attempt", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.remote.retries = static_cast<int>(to_int(k, v));
       }},
      {"backoff_ms", "initial retry backoff", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.remote.backoff = std::chrono::milliseconds(to_int(k, v));
       }},
      {"timeout_s", "remote request timeout", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.remote.timeout = std::chrono::seconds(to_int(k, v));
       }},
      {"temperature", "remote sampling temperature", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.remote.temperature = to_double(k, v);
       }},
      {"max_tokens", "remote completion limit", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.remote.max_tokens = static_cast<int>(to_int(k, v));
       }},
  };
  return k;
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(n) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  return parse_key_values(f, path);
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const auto list = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : keys()) out.emplace_back(k.name, k.help);
    for (const char* w : {"w1", "w2", "w3", "w4", "alpha", "beta", "gamma_fmt", "gamma_plan", "lambda_c", "lambda_g"}) {
      out.emplace_back(w, "reward weight");
    }
    return out;
  }();
  return list;
}

void apply_weights(reward::RewardWeights& w, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    double* slot = weight_slot(w, k);
    if (!slot) throw ConfigError("unknown weight '" + k + "'");
    *slot = to_double(k, v);
  }
  try {
    w.check();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

void apply(RunConfig& c, const KeyValues& kv) {
  KeyValues weights;
  for (const auto& [k, v] : kv) {
    if (weight_slot(c.episode.weights, k)) {
      weights[k] = v;
      continue;
    }
    bool found = false;
    for (const auto& key : keys()) {
      if (k == key.name) {
        key.set(c, k, v);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + k + "'");
  }
  if (!weights.empty()) apply_weights(c.episode.weights, weights);
}

reward::RewardWeights parse_weights(const std::string& spec, reward::RewardWeights base) {
  KeyValues kv;
  if (spec.find('=') != std::string::npos) {
    std::stringstream ss(spec);
    std::string part;
    std::string lines;
    while (std::getline(ss, part, ',')) lines += part + "\n";
    std::istringstream in(lines);
    kv = parse_key_values(in, "--weights");
  } else {
    kv = read_key_values(spec);
  }
  apply_weights(base, kv);
  return base;
}

void validate(const RunConfig& c) {
  if (c.scene.empty()) throw ConfigError("no scene given");
  if (c.group < 1) throw ConfigError("group must be at least 1");
  if (c.episode.budget.max_tool_calls < 0) throw ConfigError("budget must be non-negative");
  if (c.episode.budget.max_depth < 1) throw ConfigError("max_depth must be at least 1");
  if (c.episode.max_turns < 1) throw ConfigError("max_turns must be at least 1");
  if (c.episode.max_pixels < 1) throw ConfigError("max_pixels must be positive");
  const bool known = c.backend == "heuristic" || c.backend == "remote" || c.backend.rfind("replay:", 0) == 0;
  if (!known) throw ConfigError("backend must be heuristic, remote or replay:<file>, got '" + c.backend + "'");
  if (c.backend == "replay:") throw ConfigError("replay backend needs a script path");
  if (c.backend == "remote" && c.remote.endpoint.empty()) throw ConfigError("remote backend needs an endpoint");
  if (c.episode.dedup_iou <= 0 || c.episode.dedup_iou > 1) throw ConfigError("dedup_iou must be in (0, 1]");
}

}  // namespace zt::config
