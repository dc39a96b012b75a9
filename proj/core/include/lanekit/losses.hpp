#pragma once

#include <span>

namespace lanekit {

struct LossWeights {
  double w_cls = 1.0;
  double w_xytl = 1.0;
  double w_liou = 2.0;
};

struct FocalParams {
  double alpha = 0.25;  // in (0, 1]
  double gamma = 2.0;   // >= 0
};

/// Focal loss for a single binary prediction. p is clamped to
/// [1e-7, 1 - 1e-7] before the log.
double focal_loss(double p, bool is_positive, const FocalParams& params);

/// Mean focal loss over a batch of scores with 0/1 labels.
double focal_loss_mean(std::span<const double> probs,
                       std::span<const int> labels, const FocalParams& params);

/// Huber-style regression loss: 0.5*d^2/beta for |d| < beta, else |d| - beta/2.
double smooth_l1(double pred, double target, double beta = 1.0);

double smooth_l1_mean(std::span<const double> pred,
                      std::span<const double> target, double beta = 1.0);

struct TotalLoss {
  double cls = 0.0;
  double xytl = 0.0;
  double liou = 0.0;
  double total = 0.0;
};

/// Weighted sum of the three loss components with a per-component report.
TotalLoss total_loss(double cls_term, double xytl_term, double liou_term,
                     const LossWeights& weights);

}  // namespace lanekit
