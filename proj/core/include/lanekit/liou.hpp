#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lanekit/lane_geometry.hpp"

namespace lanekit {

struct LiouConfig {
  double radius_e = 15.0;
  /// When set, rows where only one lane exists enter the sums as a fixed
  /// penalty term (d_o, d_u) = (-2e, +2e). Default: rows valid in both only.
  bool union_rows = false;
};

/// Per-row IoU pieces of two horizontal segments of half-width e centred at
/// x_pred and x_gt. overlap = 2e - |dx| (negative once the segments separate
/// by more than 2e); union_len = 2e + |dx| is the end-to-end extent.
struct SegmentIou {
  double overlap = 0.0;
  double union_len = 0.0;
};

SegmentIou segment_iou(double x_pred, double x_gt, double radius_e);

struct LiouResult {
  double value = 0.0;  // in [-1, 1]
  std::vector<double> per_point_overlap;  // d_o per row, 0 outside the row set
  std::vector<double> per_point_union;    // d_u per row, 0 outside the row set
  std::vector<double> grad_pred;          // d(value)/d(x_pred[i])

  double loss() const { return 1.0 - value; }
  // The loss gradient is the negation of grad_pred.
};

/// Sum-of-overlaps over sum-of-unions across the selected rows, with the
/// analytic gradient with respect to the predicted xs.
///
/// With O = sum d_o, U = sum d_u and dx_i = pred - gt, each included row
/// contributes d(value)/dx_i = -sign(dx_i) * (U + O) / U^2; exact ties get
/// gradient 0 (the even-split subgradient), so a perfect match has an
/// all-zero gradient.
LiouResult line_iou(std::span<const double> pred_xs,
                    std::span<const double> gt_xs,
                    std::span<const std::uint8_t> rows, double radius_e);

/// Lane overload: the row set is rows valid in both lanes; with
/// cfg.union_rows, one-sided rows additionally contribute the fixed
/// (-2e, +2e) penalty (zero gradient).
LiouResult line_iou(const Lane& pred, const Lane& gt, const LiouConfig& cfg);

/// LIoU value for overlap checks (NMS, dynamic-k): -1 when the lanes share
/// no valid rows.
double liou_overlap(const Lane& a, const Lane& b, double radius_e);

/// Set-semantics IoU in [0, 1] for metric thresholds: per-row true segment
/// intersection over true union (disjoint rows cap the union at 4e), and
/// one-sided rows add 2e to the union only. 0 when the union is empty.
double line_iou_metric(const Lane& a, const Lane& b, double radius_e);

}  // namespace lanekit
