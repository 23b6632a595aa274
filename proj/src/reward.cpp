#include "zoomtrace/reward.hpp"

#include <algorithm>
#include <cmath>

namespace zt::reward {

void RewardWeights::check() const {
  const double all[] = {w1, w2, w3, w4, alpha, beta, gamma_fmt, gamma_plan, lambda_c, lambda_g};
  for (double v : all) {
    if (!std::isfinite(v) || v < 0) throw RewardError("reward weights must be finite and nonnegative");
  }
}

double acc_count(long long pred, long long gt) {
  if (pred < 0 || gt < 0) throw RewardError("counts must be nonnegative");
  const double err = std::fabs(static_cast<double>(pred - gt));
  return 1.0 - std::tanh(err / static_cast<double>(std::max<long long>(gt, 1)));
}

double acc_ground(const geo::NormBox& pred, const geo::NormBox& gt) {
  const double dx = (pred.x1 + pred.x2) / 2.0 - (gt.x1 + gt.x2) / 2.0;
  const double dy = (pred.y1 + pred.y2) / 2.0 - (gt.y1 + gt.y2) / 2.0;
  return 1.0 - std::tanh(std::hypot(dx, dy) / geo::kRelativeScale);
}

double iou_ground(const geo::NormBox& pred, const geo::NormBox& gt) { return geo::iou(pred, gt); }

double inclusion_score(const geo::NormBox& pred, const geo::NormBox& gt) {
  if (gt.degenerate() || pred.degenerate()) return 0.0;
  const double inter = static_cast<double>(geo::intersection_area(gt, pred));
  const double ga = static_cast<double>(gt.area());
  const double pa = static_cast<double>(pred.area());
  return (inter / ga) * std::min(1.0, ga / pa);
}

std::vector<InclusionMatch> match_inclusion(const std::vector<geo::NormBox>& preds,
                                            const std::vector<geo::NormBox>& gts) {
  std::vector<InclusionMatch> pairs;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = geo::iou(preds[p], gts[g]);
      if (v > 0) pairs.push_back({p, g, v, 0});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.iou > b.iou; });
  std::vector<char> pred_used(preds.size(), 0), gt_used(gts.size(), 0);
  std::vector<InclusionMatch> out;
  for (auto& m : pairs) {
    if (pred_used[m.pred] || gt_used[m.gt]) continue;
    pred_used[m.pred] = gt_used[m.gt] = 1;
    m.score = inclusion_score(preds[m.pred], gts[m.gt]);
    out.push_back(m);
  }
  return out;
}

double iou_count(const std::vector<geo::NormBox>& preds, const std::vector<geo::NormBox>& gts) {
  if (preds.empty()) return 0.0;
  double sum = 0;
  for (const auto& m : match_inclusion(preds, gts)) sum += m.score;
  return sum / static_cast<double>(preds.size());
}

double plan_reward(plan::QPlan q, double difficulty, const RewardWeights& w) {
  switch (q) {
    case plan::QPlan::valid: return w.alpha * difficulty;
    case plan::QPlan::bypass: return -w.beta * difficulty;
    case plan::QPlan::violation: return -w.gamma_plan;
  }
  return -w.gamma_plan;
}

RewardBreakdown total_reward(const RewardInputs& in, const RewardWeights& w) {
  if (in.task != traj::TaskKind::count && in.task != traj::TaskKind::grounding) {
    throw RewardError(std::string("no reward is defined for ") + traj::to_string(in.task) + " tasks");
  }
  RewardBreakdown b;
  b.r_fmt = in.r_fmt ? 1 : 0;
  if (!b.r_fmt) {
    b.total = -w.gamma_fmt;
    return b;
  }
  b.r_acc = in.r_acc;
  b.r_iou = in.r_iou;
  b.q_plan = static_cast<int>(in.q_plan);
  b.difficulty = in.difficulty;
  b.r_plan = plan_reward(in.q_plan, in.difficulty, w);
  b.total = w.w1 * b.r_fmt + w.w2 * in.r_acc + w.w3 * in.r_iou + w.w4 * *b.r_plan;
  return b;
}

GroupScores group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) throw RewardError("a group needs at least two rewards");
  const double n = static_cast<double>(rewards.size());
  // Shift by the first reward so a constant group has exactly zero spread.
  const double r0 = rewards.front();
  double shifted = 0;
  for (double r : rewards) shifted += r - r0;
  const double mean = r0 + shifted / n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  GroupScores g;
  g.rewards = rewards;
  for (double r : rewards) g.advantages.push_back((r - mean) / (sd + kAdvantageEps));
  return g;
}

}  // namespace zt::reward
