#include "lanekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lanekit/error.hpp"
#include "lanekit/liou.hpp"

namespace lanekit {

namespace {

/// Potential-based assignment minimizing total cost over an n x n matrix
/// (rows 1..n, cols 1..n, 0 unused). Returns col -> row matching.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size()) - 1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a[static_cast<std::size_t>(i0)][static_cast<std::size_t>(j)] -
                           u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  return p;
}

bool eligible(double iou, double threshold, bool strict) {
  return strict ? iou > threshold : iou >= threshold;
}

int canvas_dim(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

void validate_eval_config(const EvalConfig& cfg) {
  if (!(cfg.line_width > 0.0))
    raise(ErrorKind::kConfig, "eval config: line_width must be > 0");
  if (cfg.thresholds.empty())
    raise(ErrorKind::kConfig, "eval config: thresholds must be nonempty");
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    const double t = cfg.thresholds[i];
    if (!(t > 0.0 && t < 1.0))
      raise(ErrorKind::kConfig, "eval config: thresholds must lie in (0, 1)");
    if (i > 0 && !(t > cfg.thresholds[i - 1]))
      raise(ErrorKind::kConfig, "eval config: thresholds must be strictly increasing");
  }
  if (!(cfg.tusimple_pixel_tol > 0.0))
    raise(ErrorKind::kConfig, "eval config: tusimple_pixel_tol must be > 0");
  if (!(cfg.tusimple_point_frac >= 0.0 && cfg.tusimple_point_frac < 1.0))
    raise(ErrorKind::kConfig, "eval config: tusimple_point_frac must be in [0, 1)");
}

double lane_iou(const Lane& a, const Lane& b, const EvalConfig& cfg) {
  if (cfg.iou_mode == IouMode::kLine)
    return line_iou_metric(a, b, cfg.line_width / 2.0);
  if (!same_grid(a.grid, b.grid))
    raise(ErrorKind::kDimension, "lane_iou: lanes use different grids");
  const int h = canvas_dim(a.grid.image_height);
  const int w = canvas_dim(a.grid.image_width);
  thread_local BinaryMask ma, mb;
  rasterize(a, cfg.line_width, h, w, &ma);
  rasterize(b, cfg.line_width, h, w, &mb);
  return mask_iou(ma, mb);
}

std::vector<double> iou_matrix(const std::vector<Lane>& preds,
                               const std::vector<Lane>& gts,
                               const EvalConfig& cfg) {
  std::vector<double> m(preds.size() * gts.size(), 0.0);
  if (m.empty()) return m;
  if (cfg.iou_mode == IouMode::kLine) {
    const double radius = cfg.line_width / 2.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      for (std::size_t j = 0; j < gts.size(); ++j)
        m[i * gts.size() + j] = line_iou_metric(preds[i], gts[j], radius);
    return m;
  }
  // Mask mode: rasterize each side once, then popcount pairwise.
  const LaneGrid& grid = preds.empty() ? gts.front().grid : preds.front().grid;
  const int h = canvas_dim(grid.image_height);
  const int w = canvas_dim(grid.image_width);
  std::vector<BinaryMask> pm(preds.size()), gm(gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!same_grid(preds[i].grid, grid))
      raise(ErrorKind::kDimension, "iou_matrix: lanes use different grids");
    rasterize(preds[i], cfg.line_width, h, w, &pm[i]);
  }
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (!same_grid(gts[j].grid, grid))
      raise(ErrorKind::kDimension, "iou_matrix: lanes use different grids");
    rasterize(gts[j], cfg.line_width, h, w, &gm[j]);
  }
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = 0; j < gts.size(); ++j)
      m[i * gts.size() + j] = mask_iou(pm[i], gm[j]);
  return m;
}

MatchResult match_lanes(int n_preds, int n_gts,
                        const std::function<double(int, int)>& iou_fn,
                        double threshold, bool strict_greater) {
  if (n_preds < 0 || n_gts < 0)
    raise(ErrorKind::kDimension, "match_lanes: negative counts");
  MatchResult r;
  r.fp = n_preds;
  r.fn = n_gts;
  if (n_preds == 0 || n_gts == 0) return r;

  std::vector<std::vector<double>> iou(
      static_cast<std::size_t>(n_preds),
      std::vector<double>(static_cast<std::size_t>(n_gts), 0.0));
  bool any = false;
  for (int i = 0; i < n_preds; ++i)
    for (int j = 0; j < n_gts; ++j) {
      const double v = iou_fn(i, j);
      iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
      any = any || eligible(v, threshold, strict_greater);
    }
  if (!any) return r;

  // Square cost matrix: candidate pairs cost -IoU, everything else 0, so the
  // minimum-cost assignment maximizes summed IoU over candidate pairs.
  const int n = std::max(n_preds, n_gts);
  std::vector<std::vector<double>> cost(
      static_cast<std::size_t>(n) + 1,
      std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  for (int i = 0; i < n_preds; ++i)
    for (int j = 0; j < n_gts; ++j) {
      const double v = iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (eligible(v, threshold, strict_greater))
        cost[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(j) + 1] = -v;
    }
  const std::vector<int> col_to_row = solve_assignment(cost);
  for (int j = 0; j < n_gts; ++j) {
    const int i = col_to_row[static_cast<std::size_t>(j) + 1] - 1;
    if (i < 0 || i >= n_preds) continue;
    if (!eligible(iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                  threshold, strict_greater))
      continue;
    r.pairs.emplace_back(i, j);
  }
  std::sort(r.pairs.begin(), r.pairs.end());
  r.tp = static_cast<int>(r.pairs.size());
  r.fp = n_preds - r.tp;
  r.fn = n_gts - r.tp;
  return r;
}

MatchResult match_lanes(const std::vector<Lane>& preds,
                        const std::vector<Lane>& gts, const EvalConfig& cfg,
                        double threshold) {
  const std::vector<double> m = iou_matrix(preds, gts, cfg);
  const std::size_t n_gts = gts.size();
  return match_lanes(
      static_cast<int>(preds.size()), static_cast<int>(n_gts),
      [&](int i, int j) {
        return m[static_cast<std::size_t>(i) * n_gts + static_cast<std::size_t>(j)];
      },
      threshold, cfg.strict_greater);
}

EvalReport f1_curve(std::span<const ThresholdCounts> totals) {
  if (totals.empty()) raise(ErrorKind::kDimension, "f1_curve: no threshold counts");
  EvalReport report;
  report.per_threshold.reserve(totals.size());
  double f1_sum = 0.0;
  for (const ThresholdCounts& t : totals) {
    ThresholdReport r;
    r.threshold = t.threshold;
    r.tp = t.tp;
    r.fp = t.fp;
    r.fn = t.fn;
    const long long p_den = t.tp + t.fp;
    const long long r_den = t.tp + t.fn;
    r.precision = p_den == 0 ? 0.0 : static_cast<double>(t.tp) / p_den;
    r.recall = r_den == 0 ? 0.0 : static_cast<double>(t.tp) / r_den;
    const double pr = r.precision + r.recall;
    r.f1 = pr == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / pr;
    f1_sum += r.f1;
    report.per_threshold.push_back(r);
  }
  report.mf1 = f1_sum / static_cast<double>(totals.size());
  return report;
}

std::vector<ThresholdCounts> evaluate_image(const std::vector<Lane>& preds,
                                            const std::vector<Lane>& gts,
                                            const EvalConfig& cfg) {
  validate_eval_config(cfg);
  const std::vector<double> m = iou_matrix(preds, gts, cfg);
  const std::size_t n_gts = gts.size();
  const auto iou_fn = [&](int i, int j) {
    return m[static_cast<std::size_t>(i) * n_gts + static_cast<std::size_t>(j)];
  };
  std::vector<ThresholdCounts> out;
  out.reserve(cfg.thresholds.size());
  for (double tau : cfg.thresholds) {
    const MatchResult r =
        match_lanes(static_cast<int>(preds.size()), static_cast<int>(n_gts),
                    iou_fn, tau, cfg.strict_greater);
    out.push_back({tau, r.tp, r.fp, r.fn});
  }
  return out;
}

void add_counts(std::vector<ThresholdCounts>& acc,
                std::span<const ThresholdCounts> img) {
  if (acc.empty()) {
    acc.assign(img.begin(), img.end());
    return;
  }
  if (acc.size() != img.size())
    raise(ErrorKind::kDimension, "add_counts: threshold lists differ");
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i].threshold != img[i].threshold)
      raise(ErrorKind::kDimension, "add_counts: threshold lists differ");
    acc[i].tp += img[i].tp;
    acc[i].fp += img[i].fp;
    acc[i].fn += img[i].fn;
  }
}

namespace {

void accumulate_frame(const TusimpleFrame& frame, const EvalConfig& cfg,
                      TusimpleResult& acc) {
  const std::size_t rows = frame.h_samples.size();
  for (const auto& lane : frame.gts)
    if (lane.size() != rows)
      raise(ErrorKind::kFormat, "tusimple_eval: gt lane row count mismatch");
  for (const auto& lane : frame.preds)
    if (lane.size() != rows)
      raise(ErrorKind::kFormat, "tusimple_eval: pred lane row count mismatch");

  std::vector<char> pred_matched(frame.preds.size(), 0);
  for (const auto& gt : frame.gts) {
    long long present = 0;
    for (double x : gt)
      if (x >= 0.0) ++present;
    acc.total_gts += 1;
    acc.gt_points += present;

    long long best_correct = 0;
    int best_pred = -1;
    for (std::size_t p = 0; p < frame.preds.size(); ++p) {
      long long correct = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        if (gt[r] < 0.0) continue;
        const double px = frame.preds[p][r];
        if (px < 0.0) continue;
        if (std::abs(px - gt[r]) <= cfg.tusimple_pixel_tol) ++correct;
      }
      if (correct > best_correct) {
        best_correct = correct;
        best_pred = static_cast<int>(p);
      }
    }
    acc.correct_points += best_correct;
    const bool lane_correct =
        present > 0 && static_cast<double>(best_correct) / present >
                           cfg.tusimple_point_frac;
    if (lane_correct) {
      if (best_pred >= 0) pred_matched[static_cast<std::size_t>(best_pred)] = 1;
    } else {
      acc.missed_gts += 1;
    }
  }
  acc.total_preds += static_cast<long long>(frame.preds.size());
  for (char m : pred_matched)
    if (!m) acc.wrong_preds += 1;
}

}  // namespace

TusimpleResult tusimple_eval(std::span<const TusimpleFrame> frames,
                             const EvalConfig& cfg) {
  validate_eval_config(cfg);
  TusimpleResult acc;
  for (const TusimpleFrame& f : frames) accumulate_frame(f, cfg, acc);
  acc.accuracy = acc.gt_points == 0
                     ? 1.0
                     : static_cast<double>(acc.correct_points) / acc.gt_points;
  acc.fp_rate = acc.total_preds == 0
                    ? 0.0
                    : static_cast<double>(acc.wrong_preds) / acc.total_preds;
  acc.fn_rate = acc.total_gts == 0
                    ? 0.0
                    : static_cast<double>(acc.missed_gts) / acc.total_gts;
  return acc;
}

EvalReport aggregate_report(std::span<const ImageEval> images) {
  std::vector<ThresholdCounts> totals;
  for (const ImageEval& img : images) add_counts(totals, img.counts);
  if (totals.empty()) raise(ErrorKind::kDimension, "aggregate_report: no images");
  return f1_curve(totals);
}

std::vector<CategoryReport> category_report(std::span<const ImageEval> images) {
  std::map<std::string, std::vector<ThresholdCounts>> per_cat;
  for (const ImageEval& img : images) {
    const std::string key = img.category.empty() ? "uncategorized" : img.category;
    add_counts(per_cat[key], img.counts);
  }
  std::vector<CategoryReport> out;
  out.reserve(per_cat.size());
  for (auto& [name, totals] : per_cat) {
    CategoryReport r;
    r.category = name;
    r.report = f1_curve(totals);
    long long gts = 0;
    for (const ThresholdCounts& t : totals) gts += t.tp + t.fn;
    r.fp_only = gts == 0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lanekit
