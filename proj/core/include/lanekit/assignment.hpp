#pragma once

#include <vector>

#include "lanekit/lane_geometry.hpp"
#include "lanekit/losses.hpp"

namespace lanekit {

struct AssignCostConfig {
  double w_sim = 3.0;
  double w_cls = 1.0;
  int k_max = 4;
  bool one_to_one = false;  // force k = 1 per ground truth
  FocalParams focal{};
  double radius_e = 15.0;  // IoU radius used by the dynamic-k estimate
};

/// Geometric distance terms, each in [0,1] with 0 = perfect match.
struct SimilarityCost {
  double dis = 0.0;    // mean |dx| over shared rows / image width (1 if none)
  double xy = 0.0;     // start-point distance / image diagonal
  double theta = 0.0;  // |d theta| / pi
  double value = 0.0;  // (dis * xy * theta)^2
};

SimilarityCost similarity_cost(const Lane& prior_lane, const StartPose& prior_pose,
                               const Lane& gt_lane, const StartPose& gt_pose);

/// Focal cost of the prior's foreground score against a positive label;
/// monotone decreasing in the score.
double classification_cost(double score, const FocalParams& params);

double assign_cost(const SimilarityCost& sim, double cls_cost,
                   const AssignCostConfig& cfg);

struct PriorMatch {
  int prior = -1;
  double cost = 0.0;
};

struct AssignmentResult {
  /// One entry per ground truth, sorted by (cost, prior index) ascending.
  std::vector<std::vector<PriorMatch>> per_gt;
  /// One entry per prior: assigned ground-truth index, or -1 for background.
  std::vector<int> prior_to_gt;
};

/// Pick positive priors for each ground truth.
///
/// Every (prior, gt) pair gets the weighted cost above. Each gt receives a
/// quota k = clamp(round(sum of its k_max largest prior IoU values), 1,
/// k_max) (1 when one_to_one). Pairs are then granted in ascending
/// (cost, gt index, prior index) order in two passes: the first pass gives
/// every gt its best free prior, the second fills remaining quota. A prior
/// serves at most one gt; the rest are background.
AssignmentResult assign(const std::vector<LanePrior>& priors,
                        const std::vector<Lane>& gts, const LaneGrid& grid,
                        const AssignCostConfig& cfg);

}  // namespace lanekit
