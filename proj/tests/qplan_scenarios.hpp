#pragma once

// Hand-built plan scenarios, plus a random scenario generator. Each hand
// scenario carries the value worked out by hand; the oracle must agree.

#include <utility>

#include "qplan_oracle.hpp"
#include "support.hpp"

namespace zt::testing {

namespace qs {

using Box = std::array<int, 4>;
inline constexpr Box kQ1{0, 0, 500, 500};
inline constexpr Box kQ2{500, 0, 1000, 500};
inline constexpr Box kQ3{0, 500, 500, 1000};
inline constexpr Box kQ4{500, 500, 1000, 1000};

inline SItem open(std::string id, std::optional<Box> roi = std::nullopt, std::vector<SItem> kids = {}) {
  return SItem{std::move(id), roi, false, std::move(kids)};
}
inline SItem done(std::string id, std::optional<Box> roi = std::nullopt, std::vector<SItem> kids = {}) {
  return SItem{std::move(id), roi, true, std::move(kids)};
}

inline STurn plan(std::vector<SItem> items) {
  STurn t;
  t.plan = std::move(items);
  return t;
}
inline STurn progress(std::vector<SItem> items) {
  STurn t;
  t.progress = std::move(items);
  return t;
}
inline STurn zoom(Box b, std::string src = "v0") {
  STurn t;
  t.act = STurn::Act::zoom;
  t.bbox = b;
  t.src = std::move(src);
  return t;
}
inline STurn answer(bool aggregation = false) {
  STurn t;
  t.act = STurn::Act::answer;
  t.aggregation = aggregation;
  return t;
}
inline STurn with(STurn base, const STurn& act) {
  base.act = act.act;
  base.bbox = act.bbox;
  base.src = act.src;
  base.aggregation = base.aggregation || act.aggregation;
  return base;
}

}  // namespace qs

struct HandScenario {
  Scenario scenario;
  int expected;
};

inline std::vector<HandScenario> hand_scenarios() {
  using namespace qs;
  using TK = traj::TaskKind;
  std::vector<HandScenario> out;
  auto add = [&](std::string name, std::vector<STurn> turns, int expected, TK task = TK::count) {
    out.push_back({Scenario{std::move(name), task, std::move(turns)}, expected});
  };
  const std::vector<SItem> two_open{open("q1", kQ1), open("q2", kQ2)};
  const std::vector<SItem> four_open{open("q1", kQ1), open("q2", kQ2), open("q3", kQ3), open("q4", kQ4)};

  // Canonical and near-canonical executions.
  add("two items inspected then completed",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), open("q2", kQ2)}), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer(true))},
      1);
  add("answer with one item pending",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), open("q2", kQ2)}), answer())}, 0);
  add("progress marks an unknown item",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), done("C")}), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())},
      -1);
  add("four quadrants in order",
      {with(plan(four_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q2", kQ2)}), zoom(kQ3)), with(progress({done("q3", kQ3)}), zoom(kQ4)),
       with(progress({done("q4", kQ4)}), answer(true))},
      1);
  add("four quadrants, last completed without its zoom",
      {with(plan(four_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q2", kQ2)}), zoom(kQ3)), with(progress({done("q3", kQ3), done("q4", kQ4)}), answer())},
      0);
  add("four quadrants, uninspected item claimed by aggregation",
      {with(plan(four_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q2", kQ2)}), zoom(kQ3)),
       with(progress({done("q3", kQ3), done("q4", kQ4)}), answer(true))},
      -1);
  {
    STurn t = with(plan(two_open), answer());
    t.progress = std::vector<SItem>{done("q1", kQ1), done("q2", kQ2)};
    add("completed before any zoom", {t}, 0);
  }
  add("plan then immediate answer with all pending", {with(plan(two_open), answer())}, 0);
  add("no plan, no zoom, counting", {answer()}, 1);
  add("no plan, zooming counting", {zoom(kQ1), answer()}, 0);
  add("no plan, zooming grounding", {zoom(kQ1), answer()}, 1, TK::grounding);
  add("no answer", {with(plan(two_open), zoom(kQ1)), progress({done("q1", kQ1)})}, 0);
  add("second plan block",
      {with(plan(two_open), zoom(kQ1)), with(plan({open("q3", kQ3)}), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())},
      -1);
  add("repeat of the same plan",
      {with(plan(two_open), zoom(kQ1)), with(plan(two_open), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())},
      -1);
  add("nine items exceed K",
      {with(plan({open("a"), open("b"), open("c"), open("d"), open("e"), open("f"), open("g"), open("h"), open("i")}),
            answer())},
      -1);
  add("eight items at K",
      {with(plan({open("a"), open("b"), open("c"), open("d"), open("e"), open("f"), open("g"), open("h")}),
            zoom(kQ1)),
       with(progress({done("a"), done("b"), done("c"), done("d"), done("e"), done("f"), done("g"), done("h")}),
            answer())},
      1);
  add("duplicate ids in plan", {with(plan({open("q1", kQ1), open("q1", kQ2)}), answer())}, -1);
  add("un-checking a completed item",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), open("q2", kQ2)}), zoom(kQ2)),
       with(progress({open("q1", kQ1), done("q2", kQ2)}), answer())},
      -1);
  add("re-listing a completed item as done is fine",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())},
      1);
  add("answering twice",
      {with(plan({open("q1", kQ1)}), zoom(kQ1)), with(progress({done("q1", kQ1)}), answer()), answer()}, -1);

  // Coverage details.
  add("zoom covering half the item",
      {with(plan({open("q1", {{0, 0, 400, 400}})}), zoom({0, 0, 400, 200})),
       with(progress({done("q1", {{0, 0, 400, 400}})}), answer())},
      1);
  add("zoom covering less than half",
      {with(plan({open("q1", {{0, 0, 400, 400}})}), zoom({0, 0, 400, 160})),
       with(progress({done("q1", {{0, 0, 400, 400}})}), answer())},
      0);
  add("zoom elsewhere",
      {with(plan({open("q1", kQ1)}), zoom(kQ4)), with(progress({done("q1", kQ1)}), answer())}, 0);
  add("two partial zooms, neither enough",
      {with(plan({open("q1", kQ1)}), zoom({0, 0, 500, 200})), zoom({0, 300, 500, 500}),
       with(progress({done("q1", kQ1)}), answer())},
      0);
  add("zoom before the plan does not count",
      {zoom(kQ1), with(plan({open("q1", {{0, 0, 1000, 1000}})}), answer())}, 0);
  add("zoom before plan, item left pending",
      {zoom(kQ1), with(plan({open("q1")}), answer())}, 0);
  add("item without roi covered by a later zoom",
      {with(plan({open("a"), open("b")}), zoom(kQ1)), with(progress({done("a"), done("b")}), answer())}, 1);
  {
    STurn t = with(plan({open("a")}), zoom(kQ1));
    t.progress = std::vector<SItem>{done("a")};
    add("item without roi completed in the plan turn, before its zoom", {t, answer()}, 0);
  }
  add("item without roi completed one turn later",
      {with(plan({open("a")}), zoom(kQ1)), with(progress({done("a")}), answer())}, 1);
  add("full-frame roi item inspected by full zoom",
      {with(plan({open("all", {{0, 0, 1000, 1000}})}), zoom({0, 0, 1000, 1000})),
       with(progress({done("all", {{0, 0, 1000, 1000}})}), answer())},
      1);
  add("nested view coverage",
      {with(plan({open("q1", kQ1)}), zoom(kQ1)), zoom({0, 0, 500, 500}, "v1"),
       with(progress({done("q1", kQ1)}), answer())},
      1);
  add("item authored inside a crop is placed in global units",
      {zoom(kQ4), with(plan({open("q4", {{0, 0, 1000, 1000}})}), zoom(kQ4)),
       with(progress({done("q4", {{0, 0, 1000, 1000}})}), answer())},
      1);
  add("item authored inside a crop, zoom misses its global place",
      {zoom(kQ4), with(plan({open("q", kQ1)}), zoom(kQ1)), with(progress({done("q", kQ1)}), answer())}, 0);
  add("zoom from an unknown view inspects nothing",
      {with(plan({open("q1", kQ1)}), zoom(kQ1, "v7")), with(progress({done("q1", kQ1)}), answer())}, 0);

  // Aggregation claims.
  add("aggregation after full coverage",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q2", kQ2)}), answer(true))},
      1);
  add("aggregation with a pending item only",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), answer(true))}, 0);
  add("bypassed item later inspected before the aggregated answer",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), done("q2", kQ2)}), zoom(kQ2)),
       answer(true)},
      0);
  add("bypassed item never inspected, no aggregation",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())}, 0);

  // Nested checklists.
  const SItem q1_split = open("q1", kQ1, {open("q1.1", {{0, 0, 500, 250}}), open("q1.2", {{0, 250, 500, 500}})});
  add("split quadrant, children inspected and completed",
      {with(plan({q1_split}), zoom({0, 0, 500, 250})),
       with(progress({open("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}}), open("q1.2", {{0, 250, 500, 500}})})}),
            zoom({0, 250, 500, 500})),
       with(progress({done("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}}), done("q1.2", {{0, 250, 500, 500}})})}),
            answer(true))},
      1);
  add("split quadrant, one child pending",
      {with(plan({q1_split}), zoom({0, 0, 500, 250})),
       with(progress({open("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}}), open("q1.2", {{0, 250, 500, 500}})})}),
            answer())},
      0);
  add("parent checked while a child is pending stays expanded",
      {with(plan({q1_split}), zoom({0, 0, 500, 250})),
       with(progress({done("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}}), open("q1.2", {{0, 250, 500, 500}})})}),
            answer())},
      0);
  add("grandchildren in the plan breach depth",
      {with(plan({open("q1", kQ1, {open("q1.1", std::nullopt, {open("q1.1.1")})})}), answer())}, -1);
  add("sub-plan appended by progress",
      {with(plan(two_open), zoom(kQ1)),
       with(progress({open("q1", kQ1, {open("q1.a", {{0, 0, 1000, 500}}), open("q1.b", {{0, 500, 1000, 1000}})}),
                      open("q2", kQ2)}),
            zoom({0, 0, 500, 250})),
       with(progress({open("q1", kQ1, {done("q1.a", {{0, 0, 500, 250}})})}), zoom({0, 250, 500, 500})),
       with(progress({open("q1", kQ1, {done("q1.b", {{0, 250, 500, 500}})})}), zoom(kQ2)),
       with(progress({done("q2", kQ2)}), answer(true))},
      1);
  add("sub-plan below depth 1 via progress",
      {with(plan({q1_split}), zoom(kQ1)),
       with(progress({open("q1", kQ1, {open("q1.1", std::nullopt, {open("deep")})})}), answer())},
      -1);
  add("expanding a completed item",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q1", kQ1, {open("late")}), done("q2", kQ2)}), answer())},
      -1);
  add("expanding an already expanded item with a new child",
      {with(plan({open("q1", kQ1, {open("a")})}), zoom(kQ1)), with(progress({open("q1", kQ1, {done("a"), open("b")})}),
       zoom(kQ1)), with(progress({open("q1", kQ1, {done("b")})}), answer())},
      1);
  add("child completed before its zoom",
      {with(plan({q1_split}), zoom(kQ4)),
       with(progress({open("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}}), done("q1.2", {{0, 250, 500, 500}})})}),
            answer())},
      0);
  add("un-checking a completed child",
      {with(plan({q1_split}), zoom({0, 0, 500, 250})),
       with(progress({open("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}})})}), zoom({0, 250, 500, 500})),
       with(progress({open("q1", kQ1, {open("q1.1", {{0, 0, 500, 250}}), done("q1.2", {{0, 250, 500, 500}})})}),
            answer())},
      -1);
  add("parent checkbox unchecked after auto-completion is informational",
      {with(plan({q1_split}), zoom({0, 0, 500, 250})), zoom({0, 250, 500, 500}),
       with(progress({open("q1", kQ1, {done("q1.1", {{0, 0, 500, 250}}), done("q1.2", {{0, 250, 500, 500}})})}),
            zoom(kQ1)),
       with(progress({open("q1", kQ1)}), answer())},
      1);
  add("child listed at top level",
      {with(plan({q1_split}), zoom({0, 0, 500, 250})), zoom({0, 250, 500, 500}),
       with(progress({done("q1.1", {{0, 0, 500, 250}}), done("q1.2", {{0, 250, 500, 500}})}), answer())},
      1);
  add("duplicate child id reusing a top-level id",
      {with(plan({open("q1", kQ1, {open("q2")}), open("q2", kQ2)}), answer())}, -1);

  // Progress before the plan and empty sections.
  add("progress before any plan is ignored",
      {with(progress({done("x")}), zoom(kQ1)), with(plan({open("q1", kQ1)}), zoom(kQ1)),
       with(progress({done("q1", kQ1)}), answer())},
      1);
  add("unknown item listed with sub-items",
      {with(plan({open("q1", kQ1)}), zoom(kQ1)),
       with(progress({done("q1", kQ1), open("zz", kQ2, {open("zz.1", kQ2)})}), answer())},
      -1);
  add("leaf marked done twice in one listing",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1), done("q1", kQ1), open("q2", kQ2)}), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())},
      -1);
  add("done leaf listed again in a later listing",
      {with(plan(two_open), zoom(kQ1)), with(progress({done("q1", kQ1)}), zoom(kQ2)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), zoom(kQ1)),
       with(progress({done("q1", kQ1), done("q2", kQ2)}), answer())},
      1);
  add("progress listing unknown id, grounding task",
      {with(plan({open("q1", kQ1)}), zoom(kQ1)), with(progress({done("q1", kQ1), open("zz")}), answer())}, -1,
      TK::grounding);
  add("grounding with plan completed", {with(plan({open("q1", kQ1)}), zoom(kQ1)),
                                          with(progress({done("q1", kQ1)}), answer())},
      1, TK::grounding);
  add("zooms but never marks anything",
      {with(plan(two_open), zoom(kQ1)), zoom(kQ2), answer(true)}, 0);
  add("all pending, no answer, no zoom", {plan(two_open)}, 0);
  add("plan in the answer turn only",
      {zoom(kQ1), with(plan({open("q1", kQ1)}), answer())}, 0);
  add("seventeen zooms with a clean plan",
      [&] {
        std::vector<STurn> ts{with(plan(four_open), zoom(kQ1))};
        for (int i = 0; i < 15; ++i) ts.push_back(zoom(kQ2));
        ts.push_back(with(progress({done("q1", kQ1), done("q2", kQ2), open("q3", kQ3), open("q4", kQ4)}), zoom(kQ3)));
        ts.push_back(with(progress({done("q3", kQ3)}), zoom(kQ4)));
        ts.push_back(with(progress({done("q4", kQ4)}), answer(true)));
        return ts;
      }(),
      1);
  return out;
}

// Random scenarios over a small vocabulary, to exercise combinations the
// hand-built list does not.
inline Scenario random_scenario(Rng& rng) {
  using namespace qs;
  static const Box boxes[] = {kQ1, kQ2, kQ3, kQ4, {0, 0, 500, 250}, {100, 100, 900, 900}, {0, 0, 1000, 1000}};
  auto rbox = [&] { return boxes[uniform(rng, 0, 6)]; };
  auto ritem = [&](const std::string& id, bool d) {
    SItem it{id, coin(rng, 0.8) ? std::optional<Box>(rbox()) : std::nullopt, d, {}};
    return it;
  };
  Scenario sc;
  sc.name = "random";
  sc.task = coin(rng, 0.8) ? traj::TaskKind::count : traj::TaskKind::grounding;
  const auto n_turns = uniform(rng, 1, 6);
  std::vector<std::string> ids{"q1", "q2", "q3", "q1.1", "q1.2", "x"};
  for (long long i = 0; i < n_turns; ++i) {
    STurn t;
    if (coin(rng, i == 0 ? 0.8 : 0.1)) {
      std::vector<SItem> items;
      const auto n = uniform(rng, 1, 3);
      for (long long k = 0; k < n; ++k) {
        auto it = ritem("q" + std::to_string(k + 1), false);
        if (k == 0 && coin(rng, 0.3)) it.children = {ritem("q1.1", false), ritem("q1.2", false)};
        items.push_back(it);
      }
      t.plan = items;
    }
    if (coin(rng, 0.6)) {
      std::vector<SItem> items;
      const auto n = uniform(rng, 1, 3);
      for (long long k = 0; k < n; ++k) {
        auto it = ritem(ids[uniform(rng, 0, 2)], coin(rng, 0.7));
        if (it.id == "q1" && coin(rng, 0.4)) {
          it.children = {ritem(ids[uniform(rng, 3, 4)], coin(rng, 0.7))};
          if (coin(rng, 0.1)) it.children[0].children = {ritem("deep", true)};
        }
        if (coin(rng, 0.05)) it.id = "x";
        items.push_back(it);
      }
      t.progress = items;
    }
    const bool last = i + 1 == n_turns;
    if (last) {
      if (coin(rng, 0.9)) t.act = STurn::Act::answer;
      t.aggregation = coin(rng, 0.5);
    } else {
      t.act = coin(rng, 0.9) ? STurn::Act::zoom : STurn::Act::none;
      t.bbox = rbox();
      t.src = coin(rng, 0.85) ? "v0" : "v1";
    }
    sc.turns.push_back(t);
  }
  return sc;
}

}  // namespace zt::testing
