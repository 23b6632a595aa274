#pragma once

// Reward stack: accuracy, localization, plan and format terms, their weighted
// total, and group-normalized advantages.

#include <optional>
#include <stdexcept>
#include <vector>

#include "zoomtrace/geometry.hpp"
#include "zoomtrace/plan.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::reward {

struct RewardError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RewardWeights {
  double w1 = 0.1;  // format
  double w2 = 1.0;  // accuracy
  double w3 = 0.8;  // iou
  double w4 = 0.9;  // plan
  double alpha = 1.0;
  double beta = 0.2;
  double gamma_fmt = 0.8;
  double gamma_plan = 0.8;
  double lambda_c = 0.15;
  double lambda_g = 120.0;

  // Throws RewardError when any weight is negative or not finite.
  void check() const;
  bool operator==(const RewardWeights&) const = default;
};

struct RewardBreakdown {
  int r_fmt = 0;
  // Absent when r_fmt is 0.
  std::optional<double> r_acc;
  std::optional<double> r_iou;
  std::optional<int> q_plan;
  std::optional<double> difficulty;
  std::optional<double> r_plan;
  double total = 0;
  bool operator==(const RewardBreakdown&) const = default;
};

double acc_count(long long pred, long long gt);
double acc_ground(const geo::NormBox& pred, const geo::NormBox& gt);
double iou_ground(const geo::NormBox& pred, const geo::NormBox& gt);

// Greedy one-to-one matching by descending IoU, scored by gt coverage capped
// by area inflation, averaged over predictions.
struct InclusionMatch {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0;
  double score = 0;
};
double inclusion_score(const geo::NormBox& pred, const geo::NormBox& gt);
std::vector<InclusionMatch> match_inclusion(const std::vector<geo::NormBox>& preds,
                                            const std::vector<geo::NormBox>& gts);
double iou_count(const std::vector<geo::NormBox>& preds, const std::vector<geo::NormBox>& gts);

double plan_reward(plan::QPlan q, double difficulty, const RewardWeights& w);

struct RewardInputs {
  traj::TaskKind task = traj::TaskKind::count;
  int r_fmt = 0;
  double r_acc = 0;
  double r_iou = 0;
  plan::QPlan q_plan = plan::QPlan::valid;
  double difficulty = plan::kMinDifficulty;
};

// Rejects task kinds outside counting and grounding.
RewardBreakdown total_reward(const RewardInputs& in, const RewardWeights& w);

inline constexpr double kAdvantageEps = 1e-8;

struct GroupScores {
  std::vector<double> rewards;
  std::vector<double> advantages;
  bool operator==(const GroupScores&) const = default;
};

// (R - mean) / (population std + eps); throws RewardError when G < 2.
GroupScores group_advantages(const std::vector<double>& rewards);

}  // namespace zt::reward
