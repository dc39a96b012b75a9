// Microbenchmarks for the hot paths: pairwise IoU with gradient, mask
// rasterization and intersection, attention, NMS and whole-image evaluation.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "lanekit/eval_engine.hpp"
#include "lanekit/head_math.hpp"
#include "lanekit/liou.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/synth.hpp"

namespace {

using namespace lanekit;

LaneGrid default_grid() { return LaneGrid{}; }  // 72 rows, 590 x 1640

Lane straight(const LaneGrid& grid, double x_bottom, double slope) {
  Lane lane = empty_lane(grid);
  const double y_bottom = grid.y_at(grid.n_points - 1);
  for (int row = 0; row < grid.n_points; ++row) {
    const double x = x_bottom + slope * (y_bottom - grid.y_at(row));
    if (!(x >= 0.0 && x < grid.image_width)) continue;
    lane.xs[static_cast<std::size_t>(row)] = x;
    lane.valid[static_cast<std::size_t>(row)] = 1;
  }
  return lane;
}

void bm_line_iou_gradient(benchmark::State& state) {
  SynthRng rng(11);
  const int n = static_cast<int>(state.range(0));
  std::vector<double> pred(static_cast<std::size_t>(n));
  std::vector<double> gt(static_cast<std::size_t>(n));
  const std::vector<std::uint8_t> rows(static_cast<std::size_t>(n), 1);
  for (int i = 0; i < n; ++i) {
    pred[static_cast<std::size_t>(i)] = rng.uniform(100.0, 1500.0);
    gt[static_cast<std::size_t>(i)] =
        pred[static_cast<std::size_t>(i)] + rng.uniform(-25.0, 25.0);
  }
  double sink = 0.0;
  for (auto _ : state) {
    const LiouResult r = line_iou(pred, gt, rows, 15.0);
    sink += r.value + r.grad_pred[0];
  }
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(bm_line_iou_gradient)->Arg(72);

void bm_rasterize(benchmark::State& state) {
  const LaneGrid grid = default_grid();
  const Lane lane = straight(grid, 800.0, 0.3);
  const int h = static_cast<int>(grid.image_height);
  const int w = static_cast<int>(grid.image_width);
  BinaryMask mask;
  for (auto _ : state) {
    rasterize(lane, 30.0, h, w, &mask);
    benchmark::DoNotOptimize(mask.count());
  }
}
BENCHMARK(bm_rasterize);

void bm_mask_iou(benchmark::State& state) {
  const LaneGrid grid = default_grid();
  const int h = static_cast<int>(grid.image_height);
  const int w = static_cast<int>(grid.image_width);
  const BinaryMask a = rasterize(straight(grid, 800.0, 0.3), 30.0, h, w);
  const BinaryMask b = rasterize(straight(grid, 812.0, 0.3), 30.0, h, w);
  double sink = 0.0;
  for (auto _ : state) sink += mask_iou(a, b);
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(bm_mask_iou);

void bm_roi_gather(benchmark::State& state) {
  SynthRng rng(22);
  const int channels = 64;
  FeatureMap map = make_feature_map(channels, 10, 25);
  for (double& v : map.data) v = rng.normal(0.0, 1.0);
  std::vector<double> x_p(static_cast<std::size_t>(channels));
  for (double& v : x_p) v = rng.normal(0.0, 1.0);
  double sink = 0.0;
  for (auto _ : state) sink += roi_gather(x_p, map).output[0];
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(bm_roi_gather);

void bm_nms(benchmark::State& state) {
  const LaneGrid grid = default_grid();
  const int count = static_cast<int>(state.range(0));
  SynthRng rng(33);
  std::vector<Lane> lanes;
  std::vector<double> scores;
  for (int i = 0; i < count; ++i) {
    lanes.push_back(straight(grid, rng.uniform(100.0, 1500.0), rng.uniform(-0.2, 0.2)));
    scores.push_back(rng.uniform(0.0, 1.0));
  }
  for (auto _ : state) {
    const std::vector<int> kept = nms_lanes(lanes, scores, 0.5, 15.0);
    benchmark::DoNotOptimize(kept.size());
  }
}
BENCHMARK(bm_nms)->Arg(16)->Arg(64);

void bm_evaluate_image(benchmark::State& state) {
  SynthOptions opt;
  opt.seed = 44;
  opt.images = 1;
  const SynthDataset ds = synth_dataset(opt);
  EvalConfig cfg;  // mask mode, width 30
  for (auto _ : state) {
    const std::vector<ThresholdCounts> counts =
        evaluate_image(ds.images[0].preds, ds.images[0].gts, cfg);
    benchmark::DoNotOptimize(counts.size());
  }
}
BENCHMARK(bm_evaluate_image);

}  // namespace

BENCHMARK_MAIN();
