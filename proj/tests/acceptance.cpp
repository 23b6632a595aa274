// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>

#include "corpus_fixture.hpp"
#include "qplan_scenarios.hpp"
#include "support.hpp"
#include "zoomtrace/agent.hpp"
#include "zoomtrace/prompts.hpp"

using namespace zt;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Result coordinates() {
  Result r;
  const auto t0 = Clock::now();
  testing::Rng rng(1001);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double w = testing::uniform_real(rng, 1, 60000), h = testing::uniform_real(rng, 1, 60000);
    const geo::FrameBox roi{"g", testing::uniform_real(rng, 0, 1e5), testing::uniform_real(rng, 0, 1e5), w, h};
    const geo::PixelPoint p{roi.x_min + testing::uniform_real(rng, 0, w), roi.y_min + testing::uniform_real(rng, 0, h)};
    const auto back = geo::to_pixels(geo::to_relative(p, roi), roi);
    const double ex = std::abs(back.x - p.x) - (w / 2000 + 1e-9);
    const double ey = std::abs(back.y - p.y) - (h / 2000 + 1e-9);
    if (ex > 0 || ey > 0) r.fail(fmt("round trip off by %.3g beyond the bound", std::max(ex, ey)));
  }
  for (int i = 0; i < 1000; ++i) {
    const double W = static_cast<double>(testing::uniform(rng, 1000, 40000));
    const double H = static_cast<double>(testing::uniform(rng, 1000, 40000));
    // Crops of at least 200 units and a local box of at least 130 keep the
    // composed box at least one global unit wide.
    std::vector<std::array<double, 4>> crops;
    auto chain = geo::FrameChain::global(W, H);
    testing::Rect px{0, 0, W, H};
    for (int d = 0; d < 3; ++d) {
      const auto c = testing::random_box(rng, 200);
      crops.push_back({double(c.x1), double(c.y1), double(c.x2), double(c.y2)});
      const auto parent = px;
      px = testing::sub_rect(px, crops.back());
      // Regions are given in the parent's own pixel frame.
      chain = chain.child({"", px.x - parent.x, px.y - parent.y, px.w, px.h}, "v" + std::to_string(d + 1));
    }
    const auto local = testing::random_box(rng, 130);
    const auto got = geo::compose_to_global(local, chain);
    const auto want = testing::brute_compose(W, H, crops, {double(local.x1), double(local.y1), double(local.x2),
                                                           double(local.y2)});
    const double err = std::max({std::abs(got.x1 - want[0]), std::abs(got.y1 - want[1]), std::abs(got.x2 - want[2]),
                                 std::abs(got.y2 - want[3])});
    worst = std::max(worst, err);
    if (err > 1.0) r.fail(fmt("3-deep composition off by %.4f units", err));
  }
  const double secs = seconds_since(t0);
  if (secs >= 5) r.fail(fmt("took %.2f s", secs));
  if (r.pass) r.detail = fmt("10000 round trips, 1000 compositions (worst %.3f units), %.3f s", worst, secs);
  return r;
}

Result reward_numerics() {
  Result r;
  const reward::RewardWeights w;
  const double acc = reward::acc_count(5, 10);
  if (std::abs(acc - (1 - std::tanh(0.5))) > 1e-9) r.fail(fmt("acc_count(5,10) = %.12f", acc));

  const double d = 1 - std::exp(-1.5);
  const double pr = reward::plan_reward(plan::QPlan::valid, d, w);
  if (std::abs(pr - d) > 1e-9) r.fail(fmt("plan_reward = %.12f, oracle alpha*d = %.12f", pr, d));
  if (std::abs(pr - 0.776870) > 1e-9) {
    r.fail(fmt("plan_reward(1, 1-e^-1.5) = %.10f is %.3g from 0.776870, outside 1e-9", pr, std::abs(pr - 0.776870)));
  }

  reward::RewardInputs in{traj::TaskKind::count, 1, 1.0, 1.0, plan::QPlan::valid, 0.776870};
  const double total = reward::total_reward(in, w).total;
  // Weighted-sum oracle with the table weights.
  const reward::RewardWeights table{0.1, 1.0, 0.8, 0.9, 1.0, 0.2, 0.8, 0.8, 0.15, 120.0};
  if (!(w == table)) r.fail("default weights differ from the table");
  const double oracle = 0.1 * 1 + 1.0 * 1 + 0.8 * 1 + 0.9 * (1.0 * 1 * 0.776870);
  if (std::abs(total - oracle) > 1e-12) r.fail(fmt("total %.12f vs weighted sum %.12f", total, oracle));
  if (std::abs(total - 2.599183) > 1e-9) r.fail(fmt("total = %.12f, wanted 2.599183", total));

  reward::RewardInputs bad;
  bad.r_fmt = 0;
  const double mal = reward::total_reward(bad, w).total;
  if (mal != -0.8) r.fail(fmt("malformed total = %.17g", mal));
  const auto values = fmt("acc=%.9f plan=%.10f total=%.9f", acc, pr, total) + fmt(" malformed=%.1f", mal);
  r.detail = r.pass ? values : r.detail + " [" + values + "]";
  return r;
}

Result qplan_equivalence() {
  Result r;
  testing::QPlanOracle oracle;
  const auto suite = testing::hand_scenarios();
  std::set<int> values;
  std::set<plan::ViolationKind> kinds;
  int agree = 0;
  for (const auto& hs : suite) {
    const auto text = testing::render(hs.scenario);
    const auto parsed = traj::parse(text, {hs.scenario.task});
    if (!parsed.ok()) {
      r.fail("scenario '" + hs.scenario.name + "' does not parse");
      continue;
    }
    const auto rep = plan::evaluate_qplan(parsed.trajectory, hs.scenario.task);
    const int lib = static_cast<int>(rep.value);
    const int want = oracle.score(hs.scenario);
    values.insert(lib);
    for (const auto& v : rep.violations) kinds.insert(v.kind);
    if (lib == want && want == hs.expected) {
      ++agree;
    } else {
      r.fail("scenario '" + hs.scenario.name + "': library " + std::to_string(lib) + ", oracle " +
             std::to_string(want) + ", hand " + std::to_string(hs.expected));
    }
  }
  if (suite.size() < 50) r.fail("only " + std::to_string(suite.size()) + " scenarios");
  if (values != std::set<int>{-1, 0, 1}) r.fail("suite does not cover valid, bypass and violation");
  std::string missing;
  for (auto k : {plan::ViolationKind::unknown_id, plan::ViolationKind::recomplete, plan::ViolationKind::depth_breach,
                 plan::ViolationKind::illegal_transition, plan::ViolationKind::unlisted_item,
                 plan::ViolationKind::reopened, plan::ViolationKind::uninspected_aggregation,
                 plan::ViolationKind::plan_too_large}) {
    if (!kinds.count(k)) missing += std::string(missing.empty() ? "" : ", ") + plan::to_string(k);
  }
  if (!missing.empty()) r.fail("no scenario triggers " + missing);
  if (r.pass) {
    r.detail = std::to_string(agree) + "/" + std::to_string(suite.size()) + " agree, " + std::to_string(kinds.size()) +
               " violation kinds covered";
  }
  return r;
}

long long counted(const agent::EpisodeRecord& rec) {
  const auto* a = rec.analysis.parsed.trajectory.final_answer();
  if (!a) return -1;
  const auto* n = std::get_if<long long>(&a->payload);
  return n ? *n : -1;
}

Result synthetic_counting() {
  Result r;
  const auto t0 = Clock::now();
  const std::string q = "How many ships are in the image?";
  int exact = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    scene::GenParams p;
    p.seed = 5000 + i;
    p.count = 5 + static_cast<int>(i % 36);
    auto sc = std::make_shared<const scene::Scene>(scene::Scene::synthetic(scene::gen_scene(p)));
    const auto gt = sc->annotation(traj::TaskKind::count, "ship");
    agent::HeuristicBackend b;
    const auto rec = agent::run_episode(sc, q, b, {}, &gt);
    const auto want = static_cast<long long>(gt.targets().size());
    if (counted(rec) == want) {
      ++exact;
    } else {
      r.fail("seed " + std::to_string(p.seed) + ": counted " + std::to_string(counted(rec)) + ", truth " +
             std::to_string(want));
    }
  }
  int dedup_ok = 0, nodedup_over = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    scene::GenParams p;
    p.seed = 9000 + i;
    p.count = 5 + static_cast<int>((i * 7) % 36);
    p.straddle = 1 + static_cast<int>(i % 3);
    auto sc = std::make_shared<const scene::Scene>(scene::Scene::synthetic(scene::gen_scene(p)));
    const auto gt = sc->annotation(traj::TaskKind::count, "ship");
    const auto want = static_cast<long long>(gt.targets().size());

    agent::HeuristicBackend with;
    const auto a = counted(agent::run_episode(sc, q, with, {}, &gt));
    agent::HeuristicOptions o;
    o.dedup = false;
    agent::HeuristicBackend without(o);
    agent::EpisodeConfig c;
    c.dedup = false;
    const auto b = counted(agent::run_episode(sc, q, without, c, &gt));
    dedup_ok += a == want;
    nodedup_over += b > want;
    if (a != want) r.fail("straddle seed " + std::to_string(p.seed) + ": dedup counted " + std::to_string(a));
    if (b <= want) r.fail("straddle seed " + std::to_string(p.seed) + ": no-dedup counted " + std::to_string(b));
  }
  const double secs = seconds_since(t0);
  if (secs >= 120) r.fail(fmt("took %.1f s", secs));
  if (r.pass) {
    r.detail = std::to_string(exact) + "/100 exact, straddle dedup " + std::to_string(dedup_ok) +
               "/20, no-dedup over " + std::to_string(nodedup_over) + "/20, " + fmt("%.1f s", secs);
  }
  return r;
}

Result budget_and_depth() {
  Result r;
  scene::GenParams p;
  p.count = 3;
  auto sc = std::make_shared<const scene::Scene>(scene::Scene::synthetic(scene::gen_scene(p)));
  auto zoom = [](const std::string& src) {
    return "<think>look</think>\n<tool_call>{\"name\": \"zoom_in\", \"arguments\": {\"source_image_id\": \"" + src +
           "\", \"bbox\": [0, 0, 500, 500]}}</tool_call>";
  };
  agent::EpisodeConfig c;
  c.max_turns = 40;
  agent::ReplayBackend many(std::vector<std::string>(18, zoom("v0")));
  const auto rec = agent::run_episode(sc, "q", many, c);
  if (rec.outcome != agent::Outcome::budget_exhausted) r.fail(std::string("18th call gave ") + agent::to_string(rec.outcome));
  if (rec.budget.used_tool_calls != 17) r.fail("used " + std::to_string(rec.budget.used_tool_calls) + " calls");

  agent::ReplayBackend deep({zoom("v0"), zoom("v1"), zoom("v2")});
  const auto d = agent::run_episode(sc, "q", deep, {});
  if (d.outcome != agent::Outcome::depth_exceeded) r.fail(std::string("depth-3 zoom gave ") + agent::to_string(d.outcome));
  if (d.views.size() != 3) r.fail("depth-3 zoom produced a view");
  if (r.pass) r.detail = "18th call budget_exhausted after 17, depth-3 refused";
  return r;
}

Result grammar() {
  Result r;
  testing::Rng rng(1006);
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto task = static_cast<traj::TaskKind>(testing::uniform(rng, 0, 4));
    const auto t = testing::random_trajectory(rng, task);
    const auto text = traj::serialize(t);
    const auto back = traj::parse(text, {task});
    if (back.ok() && back.trajectory == t && traj::serialize(back.trajectory) == text) {
      ++same;
    } else {
      r.fail("trajectory " + std::to_string(i) + " does not round-trip");
    }
  }
  const std::string sys(prompts::asset("system"));
  const auto start = sys.find('{', sys.find("zoom_in:"));
  const auto end = sys.find("\n}", start);
  std::string why;
  const auto tmpl = start == std::string::npos || end == std::string::npos
                        ? std::nullopt
                        : traj::parse_tool_template(sys.substr(start, end + 2 - start), why);
  if (!tmpl) {
    r.fail("system prompt tool example does not read: " + why);
  } else if (tmpl->name != "zoom_in" ||
             tmpl->argument_keys != std::vector<std::string>{"source_image_id", "bbox"} ||
             tmpl->source_image_id != "<COPY_EXACT_ID_HERE>" ||
             tmpl->bbox != std::array<std::string, 4>{"x_min", "y_min", "x_max", "y_max"}) {
    r.fail("system prompt tool example has unexpected fields");
  }
  if (r.pass) r.detail = std::to_string(same) + "/1000 round trips, tool example fields exact";
  return r;
}

Result qc_gates() {
  Result r;
  using testing::Defect;
  const auto f = testing::make_fixture(
      20, {Defect::leakage, Defect::structure, Defect::syntax, Defect::inconsistency, Defect::duplicate_plan});
  const auto res = corpus::filter_corpus(testing::as_lines(f.records), f.annotations, f.options);
  int right = 0;
  for (const auto& [id, v] : res.verdicts) {
    const auto it = f.injected.find(id);
    if (it == f.injected.end()) {
      if (!v.kept) r.fail(id + " was dropped for " + corpus::to_string(v.reasons.front()));
      continue;
    }
    if (v.kept) {
      r.fail(id + " was kept");
      continue;
    }
    bool ok = v.reasons == std::vector<corpus::Reason>{testing::expected_reason(it->second)};
    // The two structure defects must be told apart by their problem text.
    const std::string all = std::accumulate(v.details.begin(), v.details.end(), std::string());
    if (it->second == Defect::duplicate_plan) ok = ok && all.find("[PLAN]") != std::string::npos;
    if (it->second == Defect::structure) ok = ok && all.find("depth") != std::string::npos;
    if (ok) {
      ++right;
    } else {
      r.fail(id + " dropped for " + corpus::to_string(v.reasons.front()) + ": " + all);
    }
  }
  if (res.report.total != 20 || res.report.kept != 15) {
    r.fail("kept " + std::to_string(res.report.kept) + " of " + std::to_string(res.report.total));
  }
  if (r.pass) r.detail = std::to_string(right) + "/5 drops attributed, 15 kept";
  return r;
}

Result group_scoring() {
  Result r;
  testing::Rng rng(1008);
  double worst_mean = 0, worst_shift = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto g = static_cast<std::size_t>(testing::uniform(rng, 2, 16));
    std::vector<double> rw(g);
    double sd = 0;
    do {
      for (auto& x : rw) x = testing::uniform_real(rng, -0.8, 2.8);
      const double m = std::accumulate(rw.begin(), rw.end(), 0.0) / double(g);
      sd = 0;
      for (double x : rw) sd += (x - m) * (x - m);
      sd = std::sqrt(sd / double(g));
    } while (sd < 0.1);
    const auto a = reward::group_advantages(rw).advantages;
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / double(g);
    worst_mean = std::max(worst_mean, std::abs(mean));
    if (std::abs(mean) >= 1e-9) r.fail(fmt("advantage mean %.3g", mean));

    const double c = testing::uniform_real(rng, 0.5, 20), k = testing::uniform_real(rng, -10, 10);
    std::vector<double> shifted(rw);
    for (auto& x : shifted) x = c * x + k;
    const auto b = reward::group_advantages(shifted).advantages;
    for (std::size_t j = 0; j < g; ++j) {
      worst_shift = std::max(worst_shift, std::abs(a[j] - b[j]));
      if (std::abs(a[j] - b[j]) > 1e-6) r.fail(fmt("affine shift changed an advantage by %.3g", std::abs(a[j] - b[j])));
    }
  }
  // Constant groups.
  for (double v : {-0.8, 0.0, 2.8}) {
    for (double x : reward::group_advantages({v, v, v}).advantages) {
      if (x != 0) r.fail("constant group gave a nonzero advantage");
    }
  }
  if (r.pass) r.detail = fmt("5000 groups, worst |mean| %.2g, worst affine change %.2g", worst_mean, worst_shift);
  return r;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Result()>> criteria[] = {
      {"coordinate algebra", coordinates},   {"reward numerics", reward_numerics},
      {"Q_plan oracle equivalence", qplan_equivalence}, {"synthetic counting", synthetic_counting},
      {"budget and depth", budget_and_depth}, {"grammar", grammar},
      {"QC gates", qc_gates},                {"group scoring", group_scoring},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Result res;
    try {
      res = run();
    } catch (const std::exception& e) {
      res.fail(std::string("exception: ") + e.what());
    }
    failed += !res.pass;
    std::printf("%s %d %s: %s\n", res.pass ? "PASS" : "FAIL", n, name, res.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
