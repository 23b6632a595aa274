#pragma once

// Oracle annotation of one image: labeled ground-truth boxes in global pixels
// plus the gold answer.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zoomtrace/geometry.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt {

struct LabeledBox {
  std::string label;
  geo::PixelBox box;
  bool operator==(const LabeledBox&) const = default;
};

struct Annotation {
  std::string id;
  traj::TaskKind task = traj::TaskKind::count;
  double width = 0;
  double height = 0;
  std::vector<LabeledBox> boxes;
  std::string target_label;  // empty: every box counts
  std::string gold;          // raw gold answer; counting defaults to the box count

  std::vector<LabeledBox> targets() const;
  // Target boxes in the global relative frame.
  std::vector<geo::NormBox> relative_targets() const;
  geo::NormBox to_relative(const geo::PixelBox& b) const;
  // Parsed gold answer, or nullopt when absent or ill-typed.
  std::optional<traj::Answer> gold_answer() const;
  bool operator==(const Annotation&) const = default;
};

nlohmann::json to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j);

}  // namespace zt
