#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lanekit/lane_geometry.hpp"

namespace lanekit {

enum class IouMode {
  kMask,  // thick-polyline rasterization on the image canvas
  kLine,  // per-row segment IoU with radius line_width / 2
};

struct EvalConfig {
  IouMode iou_mode = IouMode::kMask;
  double line_width = 30.0;  // pixels
  std::vector<double> thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                    0.75, 0.80, 0.85, 0.90, 0.95};
  double tusimple_pixel_tol = 20.0;
  double tusimple_point_frac = 0.85;
  /// A pair is a candidate match when IoU > threshold; false switches to >=.
  bool strict_greater = true;
};

void validate_eval_config(const EvalConfig& cfg);

/// IoU of one lane pair under the configured mode.
double lane_iou(const Lane& a, const Lane& b, const EvalConfig& cfg);

/// Row-major n_preds x n_gts IoU matrix.
std::vector<double> iou_matrix(const std::vector<Lane>& preds,
                               const std::vector<Lane>& gts,
                               const EvalConfig& cfg);

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<std::pair<int, int>> pairs;  // (pred index, gt index)
};

/// One-to-one matching maximizing total IoU over candidate pairs (optimal
/// bipartite matching); unmatched predictions are FP, unmatched ground
/// truths FN.
MatchResult match_lanes(int n_preds, int n_gts,
                        const std::function<double(int, int)>& iou_fn,
                        double threshold, bool strict_greater = true);

MatchResult match_lanes(const std::vector<Lane>& preds,
                        const std::vector<Lane>& gts, const EvalConfig& cfg,
                        double threshold);

struct ThresholdCounts {
  double threshold = 0.0;
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

struct ThresholdReport {
  double threshold = 0.0;
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<ThresholdReport> per_threshold;
  double mf1 = 0.0;  // mean F1 over the thresholds
};

/// Dataset-level precision/recall/F1 from aggregated counts (micro average;
/// zero denominators give 0).
EvalReport f1_curve(std::span<const ThresholdCounts> totals);

/// Counts for one image at every configured threshold (the IoU matrix is
/// computed once and re-thresholded).
std::vector<ThresholdCounts> evaluate_image(const std::vector<Lane>& preds,
                                            const std::vector<Lane>& gts,
                                            const EvalConfig& cfg);

/// acc += img, threshold lists must align (acc adopts img when empty).
void add_counts(std::vector<ThresholdCounts>& acc,
                std::span<const ThresholdCounts> img);

/// One annotated frame: x per sampled row for every lane, negative x =
/// absent at that row. Predictions must use the same h_samples rows.
struct TusimpleFrame {
  std::vector<double> h_samples;
  std::vector<std::vector<double>> gts;
  std::vector<std::vector<double>> preds;
};

struct TusimpleResult {
  double accuracy = 1.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  long long correct_points = 0;
  long long gt_points = 0;
  long long wrong_preds = 0;
  long long total_preds = 0;
  long long missed_gts = 0;
  long long total_gts = 0;
};

/// Point-tolerance evaluation: a point is correct when |dx| <= pixel_tol and
/// both sides are present; each gt lane takes the prediction with the most
/// correct points (ties: lower index) and is "correct" when the correct
/// fraction strictly exceeds point_frac. accuracy = total correct points /
/// total gt points (all gt lanes contribute); FP = predictions that are not
/// the best match of any correct gt lane / predictions; FN = gt lanes not
/// correct / gt lanes.
TusimpleResult tusimple_eval(std::span<const TusimpleFrame> frames,
                             const EvalConfig& cfg);

struct ImageEval {
  std::string category;  // empty -> "uncategorized"
  std::vector<ThresholdCounts> counts;
};

struct CategoryReport {
  std::string category;
  bool fp_only = false;  // no ground truths in this category
  EvalReport report;
};

EvalReport aggregate_report(std::span<const ImageEval> images);

/// Per-category aggregation, sorted by category name.
std::vector<CategoryReport> category_report(std::span<const ImageEval> images);

}  // namespace lanekit
