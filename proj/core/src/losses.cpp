#include "lanekit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "lanekit/error.hpp"

namespace lanekit {

namespace {
constexpr double kProbEps = 1e-7;
}

double focal_loss(double p, bool is_positive, const FocalParams& params) {
  if (!(params.alpha > 0.0) || params.alpha > 1.0)
    raise(ErrorKind::kDomain, "focal_loss: alpha must be in (0, 1]");
  if (params.gamma < 0.0) raise(ErrorKind::kDomain, "focal_loss: gamma must be >= 0");
  p = std::clamp(p, kProbEps, 1.0 - kProbEps);
  if (is_positive)
    return -params.alpha * std::pow(1.0 - p, params.gamma) * std::log(p);
  return -(1.0 - params.alpha) * std::pow(p, params.gamma) * std::log(1.0 - p);
}

double focal_loss_mean(std::span<const double> probs,
                       std::span<const int> labels, const FocalParams& params) {
  if (probs.size() != labels.size())
    raise(ErrorKind::kDimension, "focal_loss_mean: probs/labels lengths differ");
  if (probs.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    s += focal_loss(probs[i], labels[i] != 0, params);
  return s / static_cast<double>(probs.size());
}

double smooth_l1(double pred, double target, double beta) {
  if (!(beta > 0.0)) raise(ErrorKind::kDomain, "smooth_l1: beta must be > 0");
  const double d = std::abs(pred - target);
  if (d < beta) return 0.5 * d * d / beta;
  return d - 0.5 * beta;
}

double smooth_l1_mean(std::span<const double> pred,
                      std::span<const double> target, double beta) {
  if (pred.size() != target.size())
    raise(ErrorKind::kDimension, "smooth_l1_mean: pred/target lengths differ");
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += smooth_l1(pred[i], target[i], beta);
  return s / static_cast<double>(pred.size());
}

TotalLoss total_loss(double cls_term, double xytl_term, double liou_term,
                     const LossWeights& weights) {
  if (weights.w_cls < 0.0 || weights.w_xytl < 0.0 || weights.w_liou < 0.0)
    raise(ErrorKind::kDomain, "total_loss: weights must be >= 0");
  TotalLoss out;
  out.cls = weights.w_cls * cls_term;
  out.xytl = weights.w_xytl * xytl_term;
  out.liou = weights.w_liou * liou_term;
  out.total = out.cls + out.xytl + out.liou;
  return out;
}

}  // namespace lanekit
