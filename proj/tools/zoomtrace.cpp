// zoomtrace command line: run, score, validate, gen-scene, export, prompt.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zoomtrace/agent.hpp"
#include "zoomtrace/config.hpp"
#include "zoomtrace/corpus.hpp"
#include "zoomtrace/prompts.hpp"
#include "zoomtrace/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zt;

namespace {

struct Failure : std::runtime_error {
  int code;
  Failure(const std::string& m, int c = 1) : std::runtime_error(m), code(c) {}
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw Failure(path + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Failure("cannot write '" + p.string() + "'");
  f << text;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << *v;
  return os.str();
}

void print_breakdown(std::ostream& os, const reward::RewardBreakdown& b) {
  os << "r_fmt=" << b.r_fmt << " r_acc=" << fmt(b.r_acc) << " r_iou=" << fmt(b.r_iou)
     << " q_plan=" << (b.q_plan ? std::to_string(*b.q_plan) : "-") << " difficulty=" << fmt(b.difficulty)
     << " r_plan=" << fmt(b.r_plan) << " total=" << fmt(b.total) << '\n';
}

std::unique_ptr<agent::Backend> make_backend(const config::RunConfig& c) {
  if (c.backend == "heuristic") {
    agent::HeuristicOptions o;
    o.dedup = c.episode.dedup;
    o.dedup_iou = c.episode.dedup_iou;
    o.shuffle = c.shuffle;
    return std::make_unique<agent::HeuristicBackend>(o);
  }
  if (c.backend == "remote") {
    auto o = c.remote;
    if (const char* key = std::getenv(agent::kApiKeyEnv)) o.api_key = key;
    return std::make_unique<agent::RemoteBackend>(o);
  }
  const auto path = c.backend.substr(std::string("replay:").size());
  return std::make_unique<agent::ReplayBackend>(agent::ReplayBackend::from_file(path));
}

// Global view with plan rois (blue), zoom crops (yellow) and evidence boxes
// (green verified, red otherwise) drawn on top.
raster::Image overlay(const scene::Scene& sc, const agent::EpisodeRecord& r) {
  const auto [w, h] = imagetool::fit_pixels(sc.width(), sc.height(), r.config.max_pixels);
  auto img = sc.render(raster::IRect{0, 0, sc.width(), sc.height()}, w, h);
  const double sx = static_cast<double>(w) / geo::kRelativeScale;
  const double sy = static_cast<double>(h) / geo::kRelativeScale;
  auto rel = [&](const geo::NormBox& b, raster::Rgb c, int t) {
    raster::draw_rect(img, static_cast<int>(b.x1 * sx), static_cast<int>(b.y1 * sy), static_cast<int>(b.x2 * sx),
                      static_cast<int>(b.y2 * sy), c, t);
  };
  for (const auto& id : r.analysis.qplan.state.order) {
    const auto& it = r.analysis.qplan.state.items.at(id);
    if (it.roi) rel(*it.roi, raster::Rgb{40, 90, 255}, 3);
  }
  const double px = static_cast<double>(w) / static_cast<double>(sc.width());
  const double py = static_cast<double>(h) / static_cast<double>(sc.height());
  for (const auto& v : r.views) {
    if (v.parent.empty()) continue;
    raster::draw_rect(img, static_cast<int>(v.region.x * px), static_cast<int>(v.region.y * py),
                      static_cast<int>(v.region.x2() * px), static_cast<int>(v.region.y2() * py),
                      raster::Rgb{255, 220, 0}, 1);
  }
  for (const auto& e : r.analysis.evidence.entries) {
    const bool ok = e.status == evidence::Status::verified;
    rel(e.global_box, ok ? raster::Rgb{0, 230, 60} : raster::Rgb{255, 0, 0}, 2);
  }
  return img;
}

std::optional<Annotation> load_gt(const std::string& path, const scene::Scene* sc, const agent::EpisodeConfig& ep) {
  if (!path.empty()) return annotation_from_json(read_json(path));
  if (sc && sc->is_synthetic()) return sc->annotation(ep.task, ep.target_label);
  return std::nullopt;
}

// ---- run ----

struct RunFlags {
  std::string config_file;
  std::optional<std::string> scene, task, question, backend, out, gt, label, weights, endpoint, model, prompt_asset,
      obj_frame;
  std::optional<int> budget, max_depth, group, max_turns;
  std::optional<long long> seed;
  std::optional<double> dedup_iou;
  bool no_dedup = false;
  bool inject_evidence = false;
  bool save_views = false;
};

config::RunConfig resolve(const RunFlags& f) {
  config::RunConfig c;
  if (!f.config_file.empty()) config::apply(c, config::read_key_values(f.config_file));
  config::KeyValues kv;
  auto put = [&](const char* k, const auto& v) {
    if (v) {
      std::ostringstream os;
      os << *v;
      kv[k] = os.str();
    }
  };
  put("scene", f.scene);
  put("task", f.task);
  put("question", f.question);
  put("backend", f.backend);
  put("out", f.out);
  put("gt", f.gt);
  put("label", f.label);
  put("endpoint", f.endpoint);
  put("model", f.model);
  put("prompt_asset", f.prompt_asset);
  put("obj_frame", f.obj_frame);
  put("budget", f.budget);
  put("max_depth", f.max_depth);
  put("group", f.group);
  put("max_turns", f.max_turns);
  put("seed", f.seed);
  if (f.dedup_iou) kv["dedup_iou"] = std::to_string(*f.dedup_iou);
  if (f.no_dedup) kv["dedup"] = "false";
  if (f.inject_evidence) kv["inject_evidence"] = "true";
  config::apply(c, kv);
  if (f.weights) c.episode.weights = config::parse_weights(*f.weights, c.episode.weights);
  config::validate(c);
  return c;
}

int cmd_run(const RunFlags& f) {
  const auto c = resolve(f);
  auto sc = std::make_shared<const scene::Scene>(scene::Scene::open(c.scene));
  const auto gt = load_gt(c.gt, sc.get(), c.episode);
  const std::string question = c.question.empty() ? "How many " + (c.episode.target_label.empty() ? std::string("objects") : c.episode.target_label + "s") + " are in the image?" : c.question;
  auto backend = make_backend(c);
  const fs::path out(c.out);
  fs::create_directories(out);

  std::vector<agent::EpisodeRecord> records;
  std::optional<reward::GroupScores> scores;
  if (c.group > 1) {
    if (!gt) throw Failure("group mode needs ground truth (--gt or a synthetic scene)");
    auto g = agent::run_group(sc, question, *backend, c.group, c.episode, *gt);
    records = std::move(g.records);
    scores = std::move(g.scores);
  } else {
    records.push_back(agent::run_episode(sc, question, *backend, c.episode, gt ? &*gt : nullptr));
  }

  int code = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    const std::string suffix = records.size() > 1 ? "_" + std::to_string(i) : "";
    write_text(out / ("record" + suffix + ".json"), agent::to_json(r).dump(2) + "\n");
    write_text(out / ("breakdown" + suffix + ".json"),
               (r.breakdown ? agent::to_json(*r.breakdown) : json(nullptr)).dump(2) + "\n");
    scene::write_png(overlay(*sc, r), (out / ("overlay" + suffix + ".png")).string());
    if (f.save_views) {
      imagetool::Session s(sc, c.episode.max_pixels, c.episode.budget);
      fs::create_directories(out / ("views" + suffix));
      scene::write_png(s.global().pixels, (out / ("views" + suffix) / "v0.png").string());
      for (const auto& v : r.views) {
        if (v.parent.empty()) continue;
        const auto& nv = s.zoom_in(v.parent, v.bbox);
        scene::write_png(nv.pixels, (out / ("views" + suffix) / (nv.view_id + ".png")).string());
      }
    }
    std::cout << "episode " << i << ": outcome=" << agent::to_string(r.outcome);
    if (!r.outcome_detail.empty()) std::cout << " (" << r.outcome_detail << ")";
    std::cout << " tool_calls=" << r.budget.used_tool_calls << '\n';
    if (r.breakdown) print_breakdown(std::cout, *r.breakdown);
    if (r.outcome == agent::Outcome::transport_error) {
      std::cerr << "error: backend transport failed: " << r.outcome_detail << '\n';
      code = 2;
    }
  }
  if (scores) {
    json g{{"rewards", scores->rewards}, {"advantages", scores->advantages}};
    write_text(out / "group.json", g.dump(2) + "\n");
    std::cout << "advantages:";
    for (double a : scores->advantages) std::cout << ' ' << fmt(a);
    std::cout << '\n';
  }
  return code;
}

// ---- score ----

struct ScoreFlags {
  std::vector<std::string> records;
  std::string gt;
  std::optional<std::string> gold;
  bool check = false;
  bool group = false;
};

int cmd_score(const ScoreFlags& f) {
  auto gt = annotation_from_json(read_json(f.gt));
  if (f.gold) gt.gold = *f.gold;
  std::vector<agent::EpisodeRecord> recs;
  for (const auto& p : f.records) recs.push_back(agent::record_from_json(read_json(p)));
  int code = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto b = agent::score_episode(recs[i], gt);
    if (!b) throw Failure(f.records[i] + ": task kind has no reward");
    std::cout << f.records[i] << ": ";
    print_breakdown(std::cout, *b);
    if (f.check) {
      if (!recs[i].breakdown) {
        std::cout << "  no stored breakdown\n";
        code = 1;
      } else if (!(agent::to_json(*recs[i].breakdown) == agent::to_json(*b))) {
        std::cout << "  differs from stored: ";
        print_breakdown(std::cout, *recs[i].breakdown);
        code = 1;
      } else {
        std::cout << "  matches stored breakdown\n";
      }
    }
  }
  if (f.group) {
    const auto g = agent::score_group(recs, gt);
    double mean = 0;
    for (double a : g.advantages) mean += a;
    mean /= static_cast<double>(g.advantages.size());
    std::cout << "advantages:";
    for (double a : g.advantages) std::cout << ' ' << fmt(a);
    std::cout << "\nmean advantage: " << std::scientific << mean << '\n';
  }
  return code;
}

// ---- validate ----

struct ValidateFlags {
  std::string corpus, annotations, blocklist, kept;
  bool as_json = false;
  bool verbose = false;
};

int cmd_validate(const ValidateFlags& f) {
  std::ifstream cin_(f.corpus);
  if (!cin_) throw Failure("cannot read corpus '" + f.corpus + "'");
  std::ifstream ain(f.annotations);
  if (!ain) throw Failure("cannot read annotations '" + f.annotations + "'");
  corpus::FilterOptions opt;
  if (!f.blocklist.empty()) {
    std::istringstream bl(slurp(f.blocklist));
    std::string line;
    while (std::getline(bl, line)) {
      if (!line.empty() && line[0] != '#') opt.blocklist.insert(line);
    }
  }
  const auto res = corpus::filter_corpus(corpus::read_corpus(cin_), corpus::read_annotations(ain), opt);
  if (f.verbose) {
    for (const auto& [id, v] : res.verdicts) {
      if (v.kept) continue;
      std::cout << id << ": " << corpus::to_string(v.reasons.front());
      for (const auto& d : v.details) std::cout << "; " << d;
      std::cout << '\n';
    }
  }
  std::cout << (f.as_json ? res.report.to_json().dump(2) + "\n" : res.report.text());
  if (!f.kept.empty()) {
    std::ostringstream os;
    for (const auto& r : res.kept) os << corpus::to_json(r).dump() << '\n';
    write_text(f.kept, os.str());
  }
  return 0;
}

// ---- gen-scene ----

struct GenFlags {
  scene::GenParams p;
  std::string out, annotation, png, task = "count", label;
};

int cmd_gen(GenFlags f) {
  const auto spec = scene::gen_scene(f.p);
  write_text(f.out, scene::to_text(spec));
  const auto sc = scene::Scene::synthetic(spec, f.out);
  if (!f.annotation.empty()) {
    const auto task = traj::task_kind_from_string(f.task);
    if (!task) throw Failure("unknown task '" + f.task + "'");
    write_text(f.annotation, to_json(sc.annotation(*task, f.label, fs::path(f.out).stem().string())).dump(2) + "\n");
  }
  if (!f.png.empty()) {
    const auto [w, h] = imagetool::fit_pixels(sc.width(), sc.height(), imagetool::kDefaultMaxPixels);
    scene::write_png(sc.render(raster::IRect{0, 0, sc.width(), sc.height()}, w, h), f.png);
  }
  std::cout << f.out << ": " << sc.width() << "x" << sc.height() << ", " << sc.ground_truth().size() << " objects\n";
  return 0;
}

// ---- export ----

int cmd_export(const std::string& in, const std::string& out, const std::string& system_file) {
  std::ifstream f(in);
  if (!f) throw Failure("cannot read corpus '" + in + "'");
  std::vector<corpus::CorpusRecord> recs;
  for (const auto& l : corpus::read_corpus(f)) {
    if (!l.record) throw Failure(in + ": unreadable record: " + l.error);
    recs.push_back(*l.record);
  }
  std::ofstream o(out);
  if (!o) throw Failure("cannot write '" + out + "'");
  corpus::export_sft(recs, o, system_file.empty() ? "" : slurp(system_file));
  std::cout << recs.size() << " records exported\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zoomtrace: zoom-in agent runtime, reward scoring and corpus tooling"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "run one episode (or a group) and write record, breakdown and overlay");
  run->add_option("--config", rf.config_file, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--scene", rf.scene, "scene spec (.scene) or raster image");
  run->add_option("--task", rf.task, "count | grounding | choice | text | route");
  run->add_option("--question", rf.question, "question text");
  run->add_option("--label", rf.label, "target label");
  run->add_option("--backend", rf.backend, "heuristic | remote | replay:<file>");
  run->add_option("--budget", rf.budget, "maximum zoom_in calls");
  run->add_option("--max-depth", rf.max_depth, "maximum zoom layers");
  run->add_option("--max-turns", rf.max_turns, "maximum model turns");
  run->add_option("--weights", rf.weights, "weights file or inline list like w1=0.1,alpha=1");
  run->add_option("--seed", rf.seed, "episode seed");
  run->add_option("--out", rf.out, "output directory");
  run->add_option("--group", rf.group, "episodes per group");
  run->add_option("--gt", rf.gt, "ground-truth annotation JSON");
  run->add_option("--endpoint", rf.endpoint, "remote endpoint URL");
  run->add_option("--model", rf.model, "remote model name");
  run->add_option("--prompt-asset", rf.prompt_asset, "task prompt asset");
  run->add_option("--obj-frame", rf.obj_frame, "current_view | global");
  run->add_option("--dedup-iou", rf.dedup_iou, "evidence merge threshold");
  run->add_flag("--no-dedup", rf.no_dedup, "keep duplicate evidence");
  run->add_flag("--inject-evidence", rf.inject_evidence, "append evidence summaries to observations");
  run->add_flag("--save-views", rf.save_views, "write every rendered view as PNG");

  ScoreFlags sf;
  auto* score = app.add_subcommand("score", "recompute reward breakdowns from stored records");
  score->add_option("records", sf.records, "record JSON files")->required()->check(CLI::ExistingFile);
  score->add_option("--gt", sf.gt, "ground-truth annotation JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--gold", sf.gold, "override the gold answer");
  score->add_flag("--check", sf.check, "fail when a stored breakdown differs");
  score->add_flag("--group", sf.group, "print group-normalized advantages");

  ValidateFlags vf;
  auto* validate = app.add_subcommand("validate", "run corpus quality gates and print the report");
  validate->add_option("--corpus", vf.corpus, "JSONL corpus")->required();
  validate->add_option("--annotations", vf.annotations, "JSONL annotations keyed by id")->required();
  validate->add_option("--blocklist", vf.blocklist, "file of blocked ids or content hashes");
  validate->add_option("--kept", vf.kept, "write kept records here");
  validate->add_flag("--json", vf.as_json, "machine-readable report");
  validate->add_flag("-v,--verbose", vf.verbose, "list dropped records");

  GenFlags gf;
  auto* gen = app.add_subcommand("gen-scene", "write a seeded synthetic scene");
  gen->add_option("--out", gf.out, "scene file")->required();
  gen->add_option("--seed", gf.p.seed);
  gen->add_option("--count", gf.p.count, "disjoint objects");
  gen->add_option("--straddle", gf.p.straddle, "objects across the vertical midline");
  gen->add_option("--width", gf.p.width);
  gen->add_option("--height", gf.p.height);
  gen->add_option("--min-size", gf.p.min_size);
  gen->add_option("--max-size", gf.p.max_size);
  gen->add_option("--labels", gf.p.labels, "labels to draw from");
  gen->add_option("--annotation", gf.annotation, "also write the annotation JSON");
  gen->add_option("--task", gf.task, "task kind of the annotation");
  gen->add_option("--label", gf.label, "target label of the annotation");
  gen->add_option("--png", gf.png, "also write a global-view preview");

  std::string ex_in, ex_out, ex_sys;
  auto* ex = app.add_subcommand("export", "convert kept corpus records to SFT JSONL");
  ex->add_option("--corpus", ex_in)->required();
  ex->add_option("--out", ex_out)->required();
  ex->add_option("--system-prompt", ex_sys, "system prompt file (default: shipped assets)");

  std::string prompt_name;
  auto* pr = app.add_subcommand("prompt", "print a shipped prompt asset, or list them");
  pr->add_option("name", prompt_name);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(rf);
    if (*score) return cmd_score(sf);
    if (*validate) return cmd_validate(vf);
    if (*gen) return cmd_gen(gf);
    if (*ex) return cmd_export(ex_in, ex_out, ex_sys);
    if (*pr) {
      if (prompt_name.empty()) {
        for (const auto& n : prompts::asset_names()) std::cout << n << '\n';
      } else {
        std::cout << prompts::asset(prompt_name) << '\n';
      }
      return 0;
    }
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
