#include "lanekit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <tuple>

#include "lanekit/error.hpp"
#include "lanekit/liou.hpp"

namespace lanekit {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SimilarityCost similarity_cost(const Lane& prior_lane, const StartPose& prior_pose,
                               const Lane& gt_lane, const StartPose& gt_pose) {
  if (!same_grid(prior_lane.grid, gt_lane.grid))
    raise(ErrorKind::kDimension, "similarity_cost: lanes use different grids");
  const LaneGrid& grid = prior_lane.grid;

  double abs_dx = 0.0;
  int shared = 0;
  for (std::size_t i = 0; i < prior_lane.xs.size(); ++i) {
    if (!prior_lane.row_valid(i) || !gt_lane.row_valid(i)) continue;
    abs_dx += std::abs(prior_lane.xs[i] - gt_lane.xs[i]);
    ++shared;
  }

  SimilarityCost c;
  c.dis = shared == 0
              ? 1.0
              : std::clamp(abs_dx / shared / grid.image_width, 0.0, 1.0);
  const double sdx = (prior_pose.start_x - gt_pose.start_x) * grid.image_width;
  const double sdy = (prior_pose.start_y - gt_pose.start_y) * grid.image_height;
  c.xy = std::clamp(std::hypot(sdx, sdy) / grid.diagonal(), 0.0, 1.0);
  c.theta = std::clamp(std::abs(prior_pose.theta - gt_pose.theta) / kPi, 0.0, 1.0);
  const double prod = c.dis * c.xy * c.theta;
  c.value = prod * prod;
  return c;
}

double classification_cost(double score, const FocalParams& params) {
  if (!(score >= 0.0 && score <= 1.0))
    raise(ErrorKind::kDomain, "classification_cost: score must be in [0, 1]");
  return focal_loss(score, /*is_positive=*/true, params);
}

double assign_cost(const SimilarityCost& sim, double cls_cost,
                   const AssignCostConfig& cfg) {
  return cfg.w_sim * sim.value + cfg.w_cls * cls_cost;
}

AssignmentResult assign(const std::vector<LanePrior>& priors,
                        const std::vector<Lane>& gts, const LaneGrid& grid,
                        const AssignCostConfig& cfg) {
  if (priors.empty()) raise(ErrorKind::kDomain, "assign: prior list is empty");
  if (cfg.k_max < 1) raise(ErrorKind::kDomain, "assign: k_max must be >= 1");

  const int n_priors = static_cast<int>(priors.size());
  const int n_gts = static_cast<int>(gts.size());

  AssignmentResult out;
  out.prior_to_gt.assign(static_cast<std::size_t>(n_priors), -1);
  out.per_gt.resize(static_cast<std::size_t>(n_gts));
  if (n_gts == 0) return out;

  std::vector<Lane> prior_lanes;
  prior_lanes.reserve(priors.size());
  std::vector<StartPose> prior_poses;
  prior_poses.reserve(priors.size());
  for (const LanePrior& p : priors) {
    prior_lanes.push_back(decode_prior(p, grid));
    prior_poses.push_back(pose_of(p));
  }

  std::vector<StartPose> gt_poses;
  gt_poses.reserve(gts.size());
  for (int g = 0; g < n_gts; ++g) {
    const Lane& gt = gts[static_cast<std::size_t>(g)];
    if (!same_grid(gt.grid, grid))
      raise(ErrorKind::kDimension, "assign: ground truth uses a different grid");
    if (gt.valid_count() == 0)
      raise(ErrorKind::kDomain, "assign: ground-truth lane is empty");
    gt_poses.push_back(derive_pose(gt));
  }

  // Cost and IoU matrices, indexed [gt * n_priors + prior].
  std::vector<double> cost(static_cast<std::size_t>(n_gts * n_priors));
  std::vector<double> iou(static_cast<std::size_t>(n_gts * n_priors));
  for (int g = 0; g < n_gts; ++g) {
    const Lane& gt = gts[static_cast<std::size_t>(g)];
    for (int p = 0; p < n_priors; ++p) {
      const std::size_t idx = static_cast<std::size_t>(g * n_priors + p);
      const SimilarityCost sim =
          similarity_cost(prior_lanes[static_cast<std::size_t>(p)],
                          prior_poses[static_cast<std::size_t>(p)], gt,
                          gt_poses[static_cast<std::size_t>(g)]);
      const double cls =
          classification_cost(priors[static_cast<std::size_t>(p)].score, cfg.focal);
      cost[idx] = assign_cost(sim, cls, cfg);
      iou[idx] = liou_overlap(prior_lanes[static_cast<std::size_t>(p)], gt,
                              cfg.radius_e);
    }
  }

  // Per-gt quota: round the summed IoU of the k_max best candidates.
  std::vector<int> quota(static_cast<std::size_t>(n_gts), 1);
  if (!cfg.one_to_one) {
    std::vector<double> row(static_cast<std::size_t>(n_priors));
    for (int g = 0; g < n_gts; ++g) {
      for (int p = 0; p < n_priors; ++p)
        row[static_cast<std::size_t>(p)] =
            iou[static_cast<std::size_t>(g * n_priors + p)];
      const int top = std::min(cfg.k_max, n_priors);
      std::partial_sort(row.begin(), row.begin() + top, row.end(),
                        [](double a, double b) { return a > b; });
      double s = 0.0;
      for (int i = 0; i < top; ++i) s += row[static_cast<std::size_t>(i)];
      quota[static_cast<std::size_t>(g)] =
          std::clamp<int>(static_cast<int>(std::lround(s)), 1, cfg.k_max);
    }
  }

  // All pairs in ascending (cost, gt, prior) order.
  std::vector<std::tuple<double, int, int>> order;
  order.reserve(cost.size());
  for (int g = 0; g < n_gts; ++g)
    for (int p = 0; p < n_priors; ++p)
      order.emplace_back(cost[static_cast<std::size_t>(g * n_priors + p)], g, p);
  std::sort(order.begin(), order.end());

  std::vector<int> taken(static_cast<std::size_t>(n_gts), 0);
  // Pass 1 guarantees every gt one prior before any gt gets its second.
  for (const auto& [c, g, p] : order) {
    if (taken[static_cast<std::size_t>(g)] > 0) continue;
    if (out.prior_to_gt[static_cast<std::size_t>(p)] != -1) continue;
    out.prior_to_gt[static_cast<std::size_t>(p)] = g;
    out.per_gt[static_cast<std::size_t>(g)].push_back({p, c});
    ++taken[static_cast<std::size_t>(g)];
  }
  // Pass 2 fills remaining quota.
  for (const auto& [c, g, p] : order) {
    if (taken[static_cast<std::size_t>(g)] >= quota[static_cast<std::size_t>(g)])
      continue;
    if (out.prior_to_gt[static_cast<std::size_t>(p)] != -1) continue;
    out.prior_to_gt[static_cast<std::size_t>(p)] = g;
    out.per_gt[static_cast<std::size_t>(g)].push_back({p, c});
    ++taken[static_cast<std::size_t>(g)];
  }

  for (auto& matches : out.per_gt)
    std::sort(matches.begin(), matches.end(), [](const PriorMatch& a, const PriorMatch& b) {
      return a.cost != b.cost ? a.cost < b.cost : a.prior < b.prior;
    });
  return out;
}

}  // namespace lanekit
