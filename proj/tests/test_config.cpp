#include <doctest.h>

#include <sstream>

#include "zoomtrace/config.hpp"

using namespace zt;
using namespace zt::config;

namespace {

KeyValues kv_of(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

}  // namespace

TEST_CASE("key = value parsing") {
  const auto kv = kv_of("# comment\n\nscene = a.scene  # trailing\n question=How many ships?\nbudget=5\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("scene") == "a.scene");
  CHECK(kv.at("question") == "How many ships?");
  CHECK_THROWS_WITH_AS(kv_of("ok = 1\nno equals here\n"), "<config>:2: expected key = value", ConfigError);
  CHECK_THROWS_AS(kv_of(" = 3\n"), ConfigError);
}

TEST_CASE("apply sets fields and weights") {
  RunConfig c;
  config::apply(c, kv_of("scene = s.scene\ntask = grounding\nbudget = 5\ndedup = false\nw1 = 0.5\nobj_frame = global\n"
                         "group = 4\nbackoff_ms = 20\n"));
  CHECK(c.scene == "s.scene");
  CHECK(c.episode.task == traj::TaskKind::grounding);
  CHECK(c.episode.budget.max_tool_calls == 5);
  CHECK_FALSE(c.episode.dedup);
  CHECK(c.episode.weights.w1 == 0.5);
  CHECK(c.group == 4);
  CHECK(c.remote.backoff == std::chrono::milliseconds(20));
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("bad keys and values are rejected") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(config::apply(c, kv_of("nope = 1")), "unknown config key 'nope'", ConfigError);
  CHECK_THROWS_AS(config::apply(c, kv_of("budget = five")), ConfigError);
  CHECK_THROWS_AS(config::apply(c, kv_of("budget = 5.5")), ConfigError);
  CHECK_THROWS_AS(config::apply(c, kv_of("dedup = maybe")), ConfigError);
  CHECK_THROWS_AS(config::apply(c, kv_of("task = poem")), ConfigError);
  CHECK_THROWS_AS(config::apply(c, kv_of("beta = -1")), ConfigError);
}

TEST_CASE("validate") {
  RunConfig c;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.scene = "x";
  CHECK_NOTHROW(validate(c));
  c.backend = "remote";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.remote.endpoint = "http://localhost:1/v1";
  CHECK_NOTHROW(validate(c));
  c.backend = "replay:";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.backend = "replay:t.txt";
  c.episode.dedup_iou = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("weights from an inline spec") {
  const auto w = parse_weights("w1=0.1, alpha=1");
  CHECK(w.w1 == 0.1);
  CHECK(w.alpha == 1.0);
  CHECK(w.w2 == reward::RewardWeights{}.w2);
  CHECK_THROWS_AS(parse_weights("w9=1"), ConfigError);
  CHECK_THROWS_AS(parse_weights("/no/such/file"), ConfigError);
}

TEST_CASE("every listed key is accepted by apply") {
  const std::map<std::string, std::string> sample{
      {"task", "count"},         {"backend", "heuristic"}, {"dedup", "true"},       {"obj_frame", "current_view"},
      {"inject_evidence", "no"}, {"shuffle", "1"},         {"dedup_iou", "0.5"},    {"plan_coverage", "0.9"},
      {"temperature", "0.2"},    {"beta", "0.1"},          {"gamma_fmt", "1"},      {"gamma_plan", "1"},
      {"lambda_c", "1"},         {"lambda_g", "1"},        {"alpha", "0.5"},        {"prompt_asset", ""}};
  for (const auto& [k, help] : config_keys()) {
    CHECK_FALSE(help.empty());
    RunConfig c;
    auto it = sample.find(k);
    const std::string v = it != sample.end() ? it->second : "3";
    CHECK_NOTHROW_MESSAGE(config::apply(c, KeyValues{{k, v}}), k);
  }
}
