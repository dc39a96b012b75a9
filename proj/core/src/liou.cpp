#include "lanekit/liou.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "lanekit/error.hpp"

namespace lanekit {

SegmentIou segment_iou(double x_pred, double x_gt, double radius_e) {
  if (!(radius_e > 0.0)) raise(ErrorKind::kDomain, "segment_iou: radius_e must be > 0");
  const double lo = std::max(x_pred - radius_e, x_gt - radius_e);
  const double hi = std::min(x_pred + radius_e, x_gt + radius_e);
  const double lo_all = std::min(x_pred - radius_e, x_gt - radius_e);
  const double hi_all = std::max(x_pred + radius_e, x_gt + radius_e);
  return {hi - lo, hi_all - lo_all};
}

namespace {

void fill_gradient(std::span<const double> pred_xs, std::span<const double> gt_xs,
                   LiouResult& r) {
  const double o = [&] {
    double s = 0.0;
    for (double v : r.per_point_overlap) s += v;
    return s;
  }();
  const double u = [&] {
    double s = 0.0;
    for (double v : r.per_point_union) s += v;
    return s;
  }();
  r.value = o / u;
  const double coef = (u + o) / (u * u);
  for (std::size_t i = 0; i < pred_xs.size(); ++i) {
    if (r.per_point_union[i] == 0.0) continue;  // row not included
    const double dx = pred_xs[i] - gt_xs[i];
    if (dx > 0.0)
      r.grad_pred[i] = -coef;
    else if (dx < 0.0)
      r.grad_pred[i] = coef;
    // tie: keep 0 so a perfect match has a zero gradient
  }
}

}  // namespace

LiouResult line_iou(std::span<const double> pred_xs,
                    std::span<const double> gt_xs,
                    std::span<const std::uint8_t> rows, double radius_e) {
  if (!(radius_e > 0.0)) raise(ErrorKind::kDomain, "line_iou: radius_e must be > 0");
  if (pred_xs.size() != gt_xs.size() || pred_xs.size() != rows.size())
    raise(ErrorKind::kDimension, "line_iou: pred/gt/rows lengths differ");
  const std::size_t n = pred_xs.size();
  LiouResult r;
  r.per_point_overlap.assign(n, 0.0);
  r.per_point_union.assign(n, 0.0);
  r.grad_pred.assign(n, 0.0);
  std::size_t included = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i]) continue;
    const SegmentIou s = segment_iou(pred_xs[i], gt_xs[i], radius_e);
    r.per_point_overlap[i] = s.overlap;
    r.per_point_union[i] = s.union_len;
    ++included;
  }
  if (included == 0) raise(ErrorKind::kDomain, "line_iou: empty row set");
  fill_gradient(pred_xs, gt_xs, r);
  return r;
}

LiouResult line_iou(const Lane& pred, const Lane& gt, const LiouConfig& cfg) {
  if (!(cfg.radius_e > 0.0)) raise(ErrorKind::kDomain, "line_iou: radius_e must be > 0");
  if (!same_grid(pred.grid, gt.grid))
    raise(ErrorKind::kDimension, "line_iou: lanes use different grids");
  const std::size_t n = pred.xs.size();
  const double e = cfg.radius_e;
  LiouResult r;
  r.per_point_overlap.assign(n, 0.0);
  r.per_point_union.assign(n, 0.0);
  r.grad_pred.assign(n, 0.0);
  std::size_t included = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool p = pred.row_valid(i);
    const bool g = gt.row_valid(i);
    if (p && g) {
      const SegmentIou s = segment_iou(pred.xs[i], gt.xs[i], e);
      r.per_point_overlap[i] = s.overlap;
      r.per_point_union[i] = s.union_len;
      ++included;
    } else if ((p || g) && cfg.union_rows) {
      // One-sided row: fixed penalty, constant in the predicted xs.
      r.per_point_overlap[i] = -2.0 * e;
      r.per_point_union[i] = 2.0 * e;
      ++included;
    }
  }
  if (included == 0) raise(ErrorKind::kDomain, "line_iou: lanes share no rows");
  fill_gradient(pred.xs, gt.xs, r);
  // One-sided penalty rows are constant in the predicted xs; fill_gradient
  // saw the sentinel difference there, so clear them.
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pred.row_valid(i) && gt.row_valid(i))) r.grad_pred[i] = 0.0;
  }
  return r;
}

double liou_overlap(const Lane& a, const Lane& b, double radius_e) {
  if (!(radius_e > 0.0)) raise(ErrorKind::kDomain, "liou_overlap: radius_e must be > 0");
  if (!same_grid(a.grid, b.grid))
    raise(ErrorKind::kDimension, "liou_overlap: lanes use different grids");
  double o = 0.0, u = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < a.xs.size(); ++i) {
    if (!a.row_valid(i) || !b.row_valid(i)) continue;
    const SegmentIou s = segment_iou(a.xs[i], b.xs[i], radius_e);
    o += s.overlap;
    u += s.union_len;
    any = true;
  }
  if (!any) return -1.0;
  return o / u;
}

double line_iou_metric(const Lane& a, const Lane& b, double radius_e) {
  if (!(radius_e > 0.0)) raise(ErrorKind::kDomain, "line_iou_metric: radius_e must be > 0");
  if (!same_grid(a.grid, b.grid))
    raise(ErrorKind::kDimension, "line_iou_metric: lanes use different grids");
  double inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i < a.xs.size(); ++i) {
    const bool av = a.row_valid(i);
    const bool bv = b.row_valid(i);
    if (av && bv) {
      const SegmentIou s = segment_iou(a.xs[i], b.xs[i], radius_e);
      inter += std::max(0.0, s.overlap);
      uni += std::min(s.union_len, 4.0 * radius_e);
    } else if (av || bv) {
      uni += 2.0 * radius_e;
    }
  }
  if (uni == 0.0) return 0.0;
  return inter / uni;
}

}  // namespace lanekit
