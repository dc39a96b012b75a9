#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lanekit/lane_geometry.hpp"

namespace lanekit {

/// Dense C x H x W grid of real values, row-major per channel.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  // [c*H*W + y*W + x]

  double at(int c, int y, int x) const {
    return data[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  double& at(int c, int y, int x) {
    return data[static_cast<std::size_t>((c * height + y) * width + x)];
  }
};

FeatureMap make_feature_map(int channels, int height, int width, double fill = 0.0);
void validate_feature_map(const FeatureMap& fmap);

/// Bilinear read at real-valued (x, y); zero outside [0, W-1] x [0, H-1]
/// (out-of-range neighbors contribute 0, so border reads fade to zero).
double bilinear_sample(const FeatureMap& fmap, int channel, double x, double y);

/// Bilinear resize (half-pixel-center coordinates, edges clamped).
FeatureMap resize_bilinear(const FeatureMap& fmap, int out_height, int out_width);

/// Features sampled along a lane prior: one column per sample point.
struct RoiFeature {
  int channels = 0;
  int samples = 0;
  std::vector<double> data;  // [c*samples + j]

  double at(int c, int j) const {
    return data[static_cast<std::size_t>(c * samples + j)];
  }
};

/// Sample n_p points uniformly in y along the prior's decoded extent and read
/// the map bilinearly at each. Image coordinates scale onto the map by
/// (width / image_width, height / image_height), so a map matching the grid
/// dimensions is sampled at the lane's own coordinates.
RoiFeature sample_roi(const LanePrior& prior, const LaneGrid& grid,
                      const FeatureMap& fmap, int n_p = 36);

/// Column mean over samples: C x N_p -> C x 1.
std::vector<double> pool_roi(const RoiFeature& roi);

struct AttentionResult {
  std::vector<double> weights;  // one per map location (HW), sums to 1
  std::vector<double> output;   // C: input + weighted sum of map columns
};

/// Single-query dot-product attention of the pooled ROI feature over every
/// location of the map: logits = x_p . X_f[:, k] / sqrt(C), softmax over k,
/// output = x_p + sum_k w_k X_f[:, k].
AttentionResult roi_gather(std::span<const double> x_p, const FeatureMap& x_f);

/// Additive update to a prior's parameters. Empty d_offsets = no offset
/// change. The score is never touched by refinement.
struct PriorDelta {
  double d_start_x = 0.0;
  double d_start_y = 0.0;
  double d_theta = 0.0;
  double d_length = 0.0;
  std::vector<double> d_offsets;
};

LanePrior compose(const LanePrior& prior, const PriorDelta& delta);

/// Maps the pooled, attention-enhanced ROI feature (length C) to a delta.
using Regressor = std::function<PriorDelta(std::span<const double>)>;

Regressor zero_regressor();

/// feature (in_dim) -> hidden -> relu -> out_dim, dense row-major weights.
struct TwoLayerWeights {
  int in_dim = 0;
  int hidden_dim = 0;
  int out_dim = 0;
  std::vector<double> w1;  // hidden_dim x in_dim
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // out_dim x hidden_dim
  std::vector<double> b2;  // out_dim
};

std::vector<double> two_layer_forward(const TwoLayerWeights& w,
                                      std::span<const double> input);

/// Interpret [d_start_x, d_start_y, d_theta, d_length, offsets...]; anything
/// past the first four entries becomes d_offsets (may be empty).
PriorDelta delta_from_vector(std::span<const double> values);

/// Wrap two dense layers as a Regressor.
Regressor linear_regressor(TwoLayerWeights weights);

struct RefinementConfig {
  int num_refinements = 3;
  int n_samples = 36;
  Regressor regressor;  // defaults to zero_regressor() when empty
};

/// One refinement step on one pyramid level: sample + pool the ROI, gather
/// attention over the level, regress deltas, compose. `carry` holds the
/// pooled feature fused across earlier levels (empty on the first level);
/// fusion is the element-wise average, and the fused vector is written back.
LanePrior refine(const LanePrior& prior, const FeatureMap& level,
                 const LaneGrid& grid, int n_samples, const Regressor& regressor,
                 std::vector<double>& carry);

/// Run refine over the level sequence (highest-semantic level first); one
/// level per step. levels.size() must equal cfg.num_refinements.
std::vector<LanePrior> refine_cascade(const std::vector<LanePrior>& initial,
                                      const std::vector<FeatureMap>& levels,
                                      const LaneGrid& grid,
                                      const RefinementConfig& cfg);

/// Evenly spaced vertical priors spanning the image bottom: start_x = i/(M-1)
/// (0.5 when M == 1), start_y = 1, theta = pi/2, full-height length, zero
/// offsets.
std::vector<LanePrior> uniform_priors(int count, const LaneGrid& grid);

/// Greedy lane NMS: process by descending score (ties: lower index first);
/// drop a lane whose IoU with any kept lane exceeds iou_thresh. Returns kept
/// indices in processing order.
std::vector<int> nms_lanes(const std::vector<Lane>& lanes,
                           std::span<const double> scores, double iou_thresh,
                           double radius_e);

struct FilterResult {
  std::vector<int> kept;    // input indices, descending score order
  std::vector<Lane> lanes;  // decoded lanes of the kept priors
};

/// Inference-time filtering: drop priors scoring below score_thresh or
/// decoding to an empty lane, then NMS over the survivors.
FilterResult inference_filter(const std::vector<LanePrior>& priors,
                              const LaneGrid& grid, double score_thresh,
                              double nms_iou_thresh, double radius_e);

}  // namespace lanekit
