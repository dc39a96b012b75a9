#include "lanekit/head_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>

#include "lanekit/error.hpp"
#include "lanekit/liou.hpp"

namespace lanekit {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

FeatureMap make_feature_map(int channels, int height, int width, double fill) {
  if (channels < 1 || height < 1 || width < 1)
    raise(ErrorKind::kDimension, "feature map dimensions must be >= 1");
  FeatureMap f;
  f.channels = channels;
  f.height = height;
  f.width = width;
  f.data.assign(static_cast<std::size_t>(channels) * height * width, fill);
  return f;
}

void validate_feature_map(const FeatureMap& fmap) {
  if (fmap.channels < 1 || fmap.height < 1 || fmap.width < 1)
    raise(ErrorKind::kDimension, "feature map dimensions must be >= 1");
  const std::size_t want =
      static_cast<std::size_t>(fmap.channels) * fmap.height * fmap.width;
  if (fmap.data.size() != want)
    raise(ErrorKind::kDimension, "feature map data size mismatch");
  for (double v : fmap.data)
    if (!std::isfinite(v))
      raise(ErrorKind::kDomain, "feature map contains non-finite values");
}

double bilinear_sample(const FeatureMap& fmap, int channel, double x, double y) {
  if (channel < 0 || channel >= fmap.channels)
    raise(ErrorKind::kDimension, "bilinear_sample: channel out of range");
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    const int yy = y0 + dy;
    if (yy < 0 || yy >= fmap.height) continue;
    const double wy = dy ? fy : 1.0 - fy;
    if (wy == 0.0) continue;
    for (int dx = 0; dx <= 1; ++dx) {
      const int xx = x0 + dx;
      if (xx < 0 || xx >= fmap.width) continue;
      const double wx = dx ? fx : 1.0 - fx;
      if (wx == 0.0) continue;
      acc += wy * wx * fmap.at(channel, yy, xx);
    }
  }
  return acc;
}

FeatureMap resize_bilinear(const FeatureMap& fmap, int out_height, int out_width) {
  validate_feature_map(fmap);
  FeatureMap out = make_feature_map(fmap.channels, out_height, out_width);
  const double sy = static_cast<double>(fmap.height) / out_height;
  const double sx = static_cast<double>(fmap.width) / out_width;
  for (int oy = 0; oy < out_height; ++oy) {
    const double src_y =
        std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(fmap.height - 1));
    for (int ox = 0; ox < out_width; ++ox) {
      const double src_x =
          std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(fmap.width - 1));
      for (int c = 0; c < fmap.channels; ++c)
        out.at(c, oy, ox) = bilinear_sample(fmap, c, src_x, src_y);
    }
  }
  return out;
}

RoiFeature sample_roi(const LanePrior& prior, const LaneGrid& grid,
                      const FeatureMap& fmap, int n_p) {
  if (n_p < 1) raise(ErrorKind::kDimension, "sample_roi: n_p must be >= 1");
  validate_feature_map(fmap);
  const Lane lane = decode_prior(prior, grid);
  const int top = lane.first_valid();
  const int bottom = lane.last_valid();
  if (bottom < 0) raise(ErrorKind::kDomain, "sample_roi: prior has no valid extent");

  const double y_top = grid.y_at(top);
  const double y_bottom = grid.y_at(bottom);
  const double row_step = grid.image_height / (grid.n_points - 1);
  const double scale_x = static_cast<double>(fmap.width) / grid.image_width;
  const double scale_y = static_cast<double>(fmap.height) / grid.image_height;

  RoiFeature roi;
  roi.channels = fmap.channels;
  roi.samples = n_p;
  roi.data.assign(static_cast<std::size_t>(fmap.channels) * n_p, 0.0);
  for (int j = 0; j < n_p; ++j) {
    const double t = n_p == 1 ? 0.0 : static_cast<double>(j) / (n_p - 1);
    const double y = y_bottom + (y_top - y_bottom) * t;
    double x;
    if (top == bottom) {
      x = lane.xs[static_cast<std::size_t>(top)];
    } else {
      // Interpolate the decoded polyline (rows top..bottom are contiguous).
      const double row_real = y / row_step;
      const int r0 = std::clamp(static_cast<int>(std::floor(row_real)), top, bottom - 1);
      const double frac = row_real - r0;
      x = lane.xs[static_cast<std::size_t>(r0)] * (1.0 - frac) +
          lane.xs[static_cast<std::size_t>(r0) + 1] * frac;
    }
    const double u = x * scale_x;
    const double v = y * scale_y;
    for (int c = 0; c < fmap.channels; ++c)
      roi.data[static_cast<std::size_t>(c * n_p + j)] = bilinear_sample(fmap, c, u, v);
  }
  return roi;
}

std::vector<double> pool_roi(const RoiFeature& roi) {
  if (roi.channels < 1 || roi.samples < 1)
    raise(ErrorKind::kDimension, "pool_roi: empty ROI feature");
  std::vector<double> pooled(static_cast<std::size_t>(roi.channels), 0.0);
  for (int c = 0; c < roi.channels; ++c) {
    double s = 0.0;
    for (int j = 0; j < roi.samples; ++j) s += roi.at(c, j);
    pooled[static_cast<std::size_t>(c)] = s / roi.samples;
  }
  return pooled;
}

AttentionResult roi_gather(std::span<const double> x_p, const FeatureMap& x_f) {
  validate_feature_map(x_f);
  const int c_dim = x_f.channels;
  if (static_cast<int>(x_p.size()) != c_dim)
    raise(ErrorKind::kDimension, "roi_gather: channel count mismatch");
  const int hw = x_f.height * x_f.width;
  const double scale = 1.0 / std::sqrt(static_cast<double>(c_dim));

  AttentionResult r;
  r.weights.assign(static_cast<std::size_t>(hw), 0.0);
  for (int k = 0; k < hw; ++k) {
    double dot = 0.0;
    for (int c = 0; c < c_dim; ++c)
      dot += x_p[static_cast<std::size_t>(c)] *
             x_f.data[static_cast<std::size_t>(c) * hw + k];
    r.weights[static_cast<std::size_t>(k)] = dot * scale;
  }
  const double m = *std::max_element(r.weights.begin(), r.weights.end());
  double sum = 0.0;
  for (double& w : r.weights) {
    w = std::exp(w - m);
    sum += w;
  }
  for (double& w : r.weights) w /= sum;

  r.output.assign(x_p.begin(), x_p.end());
  for (int c = 0; c < c_dim; ++c) {
    double g = 0.0;
    for (int k = 0; k < hw; ++k)
      g += r.weights[static_cast<std::size_t>(k)] *
           x_f.data[static_cast<std::size_t>(c) * hw + k];
    r.output[static_cast<std::size_t>(c)] += g;
  }
  return r;
}

LanePrior compose(const LanePrior& prior, const PriorDelta& delta) {
  LanePrior out = prior;
  out.start_x += delta.d_start_x;
  out.start_y += delta.d_start_y;
  out.theta += delta.d_theta;
  out.length += delta.d_length;
  if (!delta.d_offsets.empty()) {
    if (delta.d_offsets.size() != out.offsets.size())
      raise(ErrorKind::kDimension, "compose: offset delta length mismatch");
    for (std::size_t i = 0; i < out.offsets.size(); ++i)
      out.offsets[i] += delta.d_offsets[i];
  }
  return out;
}

Regressor zero_regressor() {
  return [](std::span<const double>) { return PriorDelta{}; };
}

std::vector<double> two_layer_forward(const TwoLayerWeights& w,
                                      std::span<const double> input) {
  if (w.in_dim < 1 || w.hidden_dim < 1 || w.out_dim < 1)
    raise(ErrorKind::kDimension, "two_layer_forward: dimensions must be >= 1");
  if (static_cast<int>(input.size()) != w.in_dim)
    raise(ErrorKind::kDimension, "two_layer_forward: input length mismatch");
  const std::size_t h = static_cast<std::size_t>(w.hidden_dim);
  const std::size_t o = static_cast<std::size_t>(w.out_dim);
  const std::size_t in = static_cast<std::size_t>(w.in_dim);
  if (w.w1.size() != h * in || w.b1.size() != h || w.w2.size() != o * h ||
      w.b2.size() != o)
    raise(ErrorKind::kDimension, "two_layer_forward: weight size mismatch");

  std::vector<double> hidden(h);
  for (std::size_t i = 0; i < h; ++i) {
    double s = w.b1[i];
    for (std::size_t j = 0; j < in; ++j) s += w.w1[i * in + j] * input[j];
    hidden[i] = std::max(0.0, s);
  }
  std::vector<double> out(o);
  for (std::size_t i = 0; i < o; ++i) {
    double s = w.b2[i];
    for (std::size_t j = 0; j < h; ++j) s += w.w2[i * h + j] * hidden[j];
    out[i] = s;
  }
  return out;
}

PriorDelta delta_from_vector(std::span<const double> values) {
  if (values.size() < 4)
    raise(ErrorKind::kDimension, "delta_from_vector: need at least 4 values");
  PriorDelta d;
  d.d_start_x = values[0];
  d.d_start_y = values[1];
  d.d_theta = values[2];
  d.d_length = values[3];
  d.d_offsets.assign(values.begin() + 4, values.end());
  return d;
}

Regressor linear_regressor(TwoLayerWeights weights) {
  if (weights.out_dim < 4)
    raise(ErrorKind::kDimension, "linear_regressor: out_dim must be >= 4");
  return [w = std::move(weights)](std::span<const double> feature) {
    return delta_from_vector(two_layer_forward(w, feature));
  };
}

LanePrior refine(const LanePrior& prior, const FeatureMap& level,
                 const LaneGrid& grid, int n_samples, const Regressor& regressor,
                 std::vector<double>& carry) {
  const RoiFeature roi = sample_roi(prior, grid, level, n_samples);
  std::vector<double> pooled = pool_roi(roi);
  if (!carry.empty()) {
    if (carry.size() != pooled.size())
      raise(ErrorKind::kDimension, "refine: carried feature length mismatch");
    for (std::size_t i = 0; i < pooled.size(); ++i)
      pooled[i] = 0.5 * (pooled[i] + carry[i]);
  }
  carry = pooled;
  const AttentionResult att = roi_gather(pooled, level);
  const PriorDelta delta = regressor(att.output);
  return compose(prior, delta);
}

std::vector<LanePrior> refine_cascade(const std::vector<LanePrior>& initial,
                                      const std::vector<FeatureMap>& levels,
                                      const LaneGrid& grid,
                                      const RefinementConfig& cfg) {
  if (cfg.num_refinements < 1)
    raise(ErrorKind::kConfig, "refine_cascade: num_refinements must be >= 1");
  if (static_cast<int>(levels.size()) != cfg.num_refinements)
    raise(ErrorKind::kConfig, "refine_cascade: level count must equal num_refinements");
  const Regressor& reg = cfg.regressor ? cfg.regressor : zero_regressor();

  std::vector<LanePrior> out;
  out.reserve(initial.size());
  std::vector<double> carry;
  for (const LanePrior& p0 : initial) {
    carry.clear();
    LanePrior p = p0;
    for (const FeatureMap& level : levels)
      p = refine(p, level, grid, cfg.n_samples, reg, carry);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LanePrior> uniform_priors(int count, const LaneGrid& grid) {
  if (count < 1) raise(ErrorKind::kDomain, "uniform_priors: count must be >= 1");
  std::vector<LanePrior> priors(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    LanePrior& p = priors[static_cast<std::size_t>(i)];
    p.score = 0.0;
    p.start_x = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    p.start_y = 1.0;
    p.theta = kPi / 2.0;
    p.length = grid.n_points;
    p.offsets.assign(static_cast<std::size_t>(grid.n_points), 0.0);
  }
  return priors;
}

std::vector<int> nms_lanes(const std::vector<Lane>& lanes,
                           std::span<const double> scores, double iou_thresh,
                           double radius_e) {
  if (lanes.size() != scores.size())
    raise(ErrorKind::kDimension, "nms_lanes: lanes/scores lengths differ");
  std::vector<int> order(lanes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  std::vector<int> kept;
  for (int idx : order) {
    bool suppressed = false;
    for (int k : kept) {
      if (liou_overlap(lanes[static_cast<std::size_t>(k)],
                       lanes[static_cast<std::size_t>(idx)], radius_e) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

FilterResult inference_filter(const std::vector<LanePrior>& priors,
                              const LaneGrid& grid, double score_thresh,
                              double nms_iou_thresh, double radius_e) {
  std::vector<int> candidates;
  std::vector<Lane> lanes;
  std::vector<double> scores;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    if (priors[i].score < score_thresh) continue;
    Lane lane = decode_prior(priors[i], grid);
    if (lane.valid_count() == 0) continue;
    candidates.push_back(static_cast<int>(i));
    lanes.push_back(std::move(lane));
    scores.push_back(priors[i].score);
  }
  const std::vector<int> kept = nms_lanes(lanes, scores, nms_iou_thresh, radius_e);
  FilterResult out;
  for (int k : kept) {
    out.kept.push_back(candidates[static_cast<std::size_t>(k)]);
    out.lanes.push_back(lanes[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace lanekit
