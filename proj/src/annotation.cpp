#include "zoomtrace/annotation.hpp"

#include <stdexcept>

namespace zt {

std::vector<LabeledBox> Annotation::targets() const {
  std::vector<LabeledBox> out;
  for (const auto& b : boxes) {
    if (target_label.empty() || b.label == target_label) out.push_back(b);
  }
  return out;
}

geo::NormBox Annotation::to_relative(const geo::PixelBox& b) const {
  return geo::box_to_relative(b, geo::FrameBox{geo::kGlobalFrameId, 0, 0, width, height});
}

std::vector<geo::NormBox> Annotation::relative_targets() const {
  std::vector<geo::NormBox> out;
  for (const auto& b : targets()) out.push_back(to_relative(b.box));
  return out;
}

std::optional<traj::Answer> Annotation::gold_answer() const {
  std::string raw = gold;
  if (raw.empty()) {
    if (task == traj::TaskKind::count) return traj::Answer::count(static_cast<long long>(targets().size()));
    if (task == traj::TaskKind::grounding) {
      const auto t = relative_targets();
      if (t.size() == 1) return traj::Answer::box(t.front().literal());
    }
    return std::nullopt;
  }
  std::string why;
  return traj::parse_answer(raw, task, why);
}

nlohmann::json to_json(const Annotation& a) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : a.boxes) {
    boxes.push_back({{"label", b.label}, {"box", {b.box.x1, b.box.y1, b.box.x2, b.box.y2}}});
  }
  return {{"id", a.id},       {"task", traj::to_string(a.task)}, {"width", a.width},
          {"height", a.height}, {"boxes", boxes},                  {"target_label", a.target_label},
          {"gold", a.gold}};
}

Annotation annotation_from_json(const nlohmann::json& j) {
  Annotation a;
  a.id = j.value("id", "");
  const auto kind = traj::task_kind_from_string(j.at("task").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown task kind '" + j.at("task").get<std::string>() + "'");
  a.task = *kind;
  a.width = j.at("width").get<double>();
  a.height = j.at("height").get<double>();
  if (!(a.width > 0) || !(a.height > 0)) throw std::invalid_argument("annotation canvas must be nonempty");
  for (const auto& b : j.value("boxes", nlohmann::json::array())) {
    const auto& c = b.at("box");
    LabeledBox lb{b.value("label", ""), geo::PixelBox{c.at(0).get<double>(), c.at(1).get<double>(),
                                                       c.at(2).get<double>(), c.at(3).get<double>()}};
    if (lb.box.x1 < 0 || lb.box.y1 < 0 || lb.box.x2 > a.width || lb.box.y2 > a.height || lb.box.x2 < lb.box.x1 ||
        lb.box.y2 < lb.box.y1) {
      throw std::invalid_argument("annotation box leaves the canvas");
    }
    a.boxes.push_back(std::move(lb));
  }
  a.target_label = j.value("target_label", "");
  a.gold = j.value("gold", "");
  return a;
}

}  // namespace zt
