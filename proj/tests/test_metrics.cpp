#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lanekit/liou.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/synth.hpp"
#include "test_util.hpp"

using namespace lanekit;
using testutil::make_grid;

namespace {

// All-permutations matching oracle: maximize summed IoU over candidate
// pairs by trying every injective pred->gt map (preds and gts <= 4).
MatchResult brute_match(int n_preds, int n_gts,
                        const std::vector<std::vector<double>>& iou,
                        double threshold, bool strict) {
  auto ok = [&](double v) { return strict ? v > threshold : v >= threshold; };
  const int n = std::max(n_preds, n_gts);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  std::vector<std::pair<int, int>> best_pairs;
  do {
    double total = 0.0;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n_preds; ++i) {
      const int j = perm[static_cast<std::size_t>(i)];
      if (j >= n_gts) continue;
      const double v = iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (!ok(v)) continue;
      total += v;
      pairs.emplace_back(i, j);
    }
    if (total > best + 1e-12) {
      best = total;
      best_pairs = pairs;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  MatchResult r;
  r.tp = static_cast<int>(best_pairs.size());
  r.fp = n_preds - r.tp;
  r.fn = n_gts - r.tp;
  std::sort(best_pairs.begin(), best_pairs.end());
  r.pairs = std::move(best_pairs);
  return r;
}

std::vector<Lane> shifted_copies(const LaneGrid& grid, double x0, double step,
                                 int count) {
  std::vector<Lane> lanes;
  for (int i = 0; i < count; ++i)
    lanes.push_back(testutil::straight_lane(grid, x0 + step * i, 0.0));
  return lanes;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("eval config validation") {
  EvalConfig cfg;
  CHECK_NOTHROW(validate_eval_config(cfg));
  CHECK(cfg.thresholds.size() == 10);
  CHECK(cfg.thresholds.front() == 0.50);
  CHECK(cfg.thresholds.back() == 0.95);

  EvalConfig bad = cfg;
  bad.thresholds.clear();
  CHECK_THROWS_AS(validate_eval_config(bad), Error);
  bad = cfg;
  bad.thresholds = {0.5, 0.5};
  CHECK_THROWS_AS(validate_eval_config(bad), Error);
  bad = cfg;
  bad.thresholds = {0.0, 0.5};
  CHECK_THROWS_AS(validate_eval_config(bad), Error);
  bad = cfg;
  bad.line_width = 0.0;
  CHECK_THROWS_AS(validate_eval_config(bad), Error);
  bad = cfg;
  bad.tusimple_point_frac = 1.0;
  CHECK_THROWS_AS(validate_eval_config(bad), Error);
}

TEST_CASE("pairwise lane iou respects the configured mode") {
  const LaneGrid grid = make_grid(20, 200.0, 400.0);
  const Lane a = testutil::straight_lane(grid, 200.0, 0.0);
  Lane b = a;
  for (double& x : b.xs) x += 10.0;

  EvalConfig cfg;
  cfg.line_width = 30.0;
  CHECK(lane_iou(a, a, cfg) == doctest::Approx(1.0));

  cfg.iou_mode = IouMode::kLine;
  // Line mode with width 30: radius 15, offset 10 -> 20/40.
  CHECK(lane_iou(a, b, cfg) == doctest::Approx(0.5));
  CHECK(lane_iou(a, a, cfg) == doctest::Approx(1.0));

  // Near-vertical lanes: both modes agree closely.
  cfg.iou_mode = IouMode::kMask;
  const double mask_v = lane_iou(a, b, cfg);
  CHECK(mask_v == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("iou matrix covers every pair once") {
  const LaneGrid grid = make_grid(20, 200.0, 400.0);
  const std::vector<Lane> preds = shifted_copies(grid, 100.0, 100.0, 3);
  const std::vector<Lane> gts = shifted_copies(grid, 100.0, 100.0, 2);
  EvalConfig cfg;
  const std::vector<double> m = iou_matrix(preds, gts, cfg);
  REQUIRE(m.size() == 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      const double direct = lane_iou(preds[static_cast<std::size_t>(i)],
                                     gts[static_cast<std::size_t>(j)], cfg);
      CHECK(m[static_cast<std::size_t>(i * 2 + j)] == doctest::Approx(direct));
    }
  CHECK(iou_matrix({}, gts, cfg).empty());
}

TEST_CASE("matching basics") {
  const auto iou = [](int i, int j) { return i == j ? 0.9 : 0.1; };

  SUBCASE("diagonal pairs match") {
    const MatchResult r = match_lanes(3, 3, iou, 0.5);
    CHECK(r.tp == 3);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}});
  }

  SUBCASE("extra predictions become false positives") {
    const MatchResult r = match_lanes(4, 2, iou, 0.5);
    CHECK(r.tp == 2);
    CHECK(r.fp == 2);
    CHECK(r.fn == 0);
  }

  SUBCASE("missing predictions become false negatives") {
    const MatchResult r = match_lanes(1, 3, iou, 0.5);
    CHECK(r.tp == 1);
    CHECK(r.fp == 0);
    CHECK(r.fn == 2);
  }

  SUBCASE("empty sides") {
    const MatchResult r = match_lanes(0, 2, iou, 0.5);
    CHECK(r.tp == 0);
    CHECK(r.fp == 0);
    CHECK(r.fn == 2);
    const MatchResult r2 = match_lanes(2, 0, iou, 0.5);
    CHECK(r2.fp == 2);
    CHECK(r2.fn == 0);
  }

  SUBCASE("the threshold comparison is strict by default") {
    const auto flat = [](int, int) { return 0.5; };
    CHECK(match_lanes(1, 1, flat, 0.5).tp == 0);
    CHECK(match_lanes(1, 1, flat, 0.5, /*strict_greater=*/false).tp == 1);
  }
}

TEST_CASE("matching prefers the higher-iou pairing") {
  // Pred 0 overlaps both gts; giving it gt 1 frees gt 0 for pred 1.
  std::vector<std::vector<double>> iou = {{0.8, 0.9}, {0.7, 0.0}};
  const auto fn = [&](int i, int j) {
    return iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  };
  const MatchResult r = match_lanes(2, 2, fn, 0.5);
  CHECK(r.tp == 2);
  CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("matching counts equal an all-permutations oracle") {
  SynthRng rng(424242);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_preds = static_cast<int>(rng.next_u64() % 5);
    const int n_gts = static_cast<int>(rng.next_u64() % 5);
    std::vector<std::vector<double>> iou(
        static_cast<std::size_t>(n_preds),
        std::vector<double>(static_cast<std::size_t>(n_gts), 0.0));
    for (auto& row : iou)
      for (double& v : row) v = rng.uniform(0.0, 1.0);
    const double tau = rng.uniform(0.3, 0.7);
    const bool strict = (trial % 2) == 0;
    const auto fn = [&](int i, int j) {
      return iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    };
    const MatchResult got = match_lanes(n_preds, n_gts, fn, tau, strict);
    const MatchResult want = brute_match(n_preds, n_gts, iou, tau, strict);
    CAPTURE(trial);
    CHECK(got.tp == want.tp);
    CHECK(got.fp == want.fp);
    CHECK(got.fn == want.fn);
    CHECK(got.tp + got.fn == n_gts);
    CHECK(got.tp + got.fp == n_preds);
  }
}

TEST_CASE("f1 curve aggregates counts") {
  std::vector<ThresholdCounts> totals = {{0.5, 8, 2, 2}, {0.75, 4, 6, 6}};
  const EvalReport rep = f1_curve(totals);
  REQUIRE(rep.per_threshold.size() == 2);
  CHECK(rep.per_threshold[0].precision == doctest::Approx(0.8));
  CHECK(rep.per_threshold[0].recall == doctest::Approx(0.8));
  CHECK(rep.per_threshold[0].f1 == doctest::Approx(0.8));
  CHECK(rep.per_threshold[1].f1 == doctest::Approx(0.4));
  CHECK(rep.mf1 == doctest::Approx(0.6));

  SUBCASE("zero denominators give zero, not nan") {
    std::vector<ThresholdCounts> none = {{0.5, 0, 0, 0}};
    const EvalReport r = f1_curve(none);
    CHECK(r.per_threshold[0].precision == 0.0);
    CHECK(r.per_threshold[0].recall == 0.0);
    CHECK(r.per_threshold[0].f1 == 0.0);
    CHECK(r.mf1 == 0.0);
  }

  SUBCASE("empty input is a dimension error") {
    CHECK_THROWS_AS(f1_curve(std::vector<ThresholdCounts>{}), Error);
  }
}

TEST_CASE("image evaluation re-thresholds one iou matrix") {
  const LaneGrid grid = make_grid(20, 200.0, 400.0);
  const std::vector<Lane> gts = shifted_copies(grid, 120.0, 160.0, 2);
  EvalConfig cfg;

  SUBCASE("perfect predictions sweep every threshold") {
    const std::vector<ThresholdCounts> counts = evaluate_image(gts, gts, cfg);
    REQUIRE(counts.size() == cfg.thresholds.size());
    for (const ThresholdCounts& t : counts) {
      CHECK(t.tp == 2);
      CHECK(t.fp == 0);
      CHECK(t.fn == 0);
    }
    const EvalReport rep = f1_curve(counts);
    CHECK(rep.mf1 == doctest::Approx(1.0));
  }

  SUBCASE("a moderate overlap passes only the low thresholds") {
    // Line mode with radius 15 and a fixed shift gives an exact IoU.
    EvalConfig line = cfg;
    line.iou_mode = IouMode::kLine;
    std::vector<Lane> off = gts;
    for (Lane& lane : off)
      for (double& x : lane.xs) x += 30.0 * 38.0 / 162.0;
    // IoU = (30 - d) / (30 + d) with d = 30*38/162: exactly 0.62.
    const double d = 30.0 * 38.0 / 162.0;
    CHECK(line_iou_metric(off[0], gts[0], 15.0) ==
          doctest::Approx((30.0 - d) / (30.0 + d)));
    const std::vector<ThresholdCounts> counts = evaluate_image(off, gts, line);
    for (const ThresholdCounts& t : counts) {
      const bool pass = t.threshold < 0.62;
      CHECK(t.tp == (pass ? 2 : 0));
      CHECK(t.fp == (pass ? 0 : 2));
      CHECK(t.fn == (pass ? 0 : 2));
    }
    // F1 = 1 at 0.50/0.55/0.60 and 0 above: the mean is exactly 0.3.
    const EvalReport rep = f1_curve(counts);
    CHECK(rep.mf1 == 0.3);
  }

  SUBCASE("no predictions yields pure false negatives") {
    const std::vector<ThresholdCounts> counts = evaluate_image({}, gts, cfg);
    for (const ThresholdCounts& t : counts) {
      CHECK(t.tp == 0);
      CHECK(t.fp == 0);
      CHECK(t.fn == 2);
    }
  }

  SUBCASE("per-threshold true positives never increase with the threshold") {
    SynthRng rng(1357);
    SynthOptions opt;
    opt.seed = 99;
    opt.images = 4;
    opt.grid = grid;
    const SynthDataset data = synth_dataset(opt);
    for (const SynthImage& img : data.images) {
      const std::vector<ThresholdCounts> counts =
          evaluate_image(img.preds, img.gts, cfg);
      for (std::size_t i = 1; i < counts.size(); ++i)
        CHECK(counts[i].tp <= counts[i - 1].tp);
    }
  }
}

TEST_CASE("count accumulation") {
  std::vector<ThresholdCounts> acc;
  const std::vector<ThresholdCounts> a = {{0.5, 1, 2, 3}, {0.75, 4, 5, 6}};
  add_counts(acc, a);
  CHECK(acc.size() == 2);
  add_counts(acc, a);
  CHECK(acc[0].tp == 2);
  CHECK(acc[1].fn == 12);

  std::vector<ThresholdCounts> other = {{0.6, 1, 1, 1}};
  CHECK_THROWS_AS(add_counts(acc, other), Error);
  std::vector<ThresholdCounts> wrong_tau = {{0.6, 0, 0, 0}, {0.75, 0, 0, 0}};
  CHECK_THROWS_AS(add_counts(acc, wrong_tau), Error);
}

TEST_CASE("point-tolerance evaluation") {
  EvalConfig cfg;  // tol 20, frac 0.85

  SUBCASE("perfect predictions") {
    TusimpleFrame frame;
    for (int r = 0; r < 10; ++r) frame.h_samples.push_back(160.0 + 10.0 * r);
    frame.gts = {std::vector<double>(10, 300.0), std::vector<double>(10, 600.0)};
    frame.preds = frame.gts;
    const TusimpleResult res = tusimple_eval(std::vector<TusimpleFrame>{frame}, cfg);
    CHECK(res.accuracy == 1.0);
    CHECK(res.fp_rate == 0.0);
    CHECK(res.fn_rate == 0.0);
  }

  SUBCASE("a uniform shift beyond the tolerance zeroes the accuracy") {
    TusimpleFrame frame;
    for (int r = 0; r < 10; ++r) frame.h_samples.push_back(160.0 + 10.0 * r);
    frame.gts = {std::vector<double>(10, 300.0)};
    frame.preds = {std::vector<double>(10, 325.0)};  // 25 px off
    const TusimpleResult res = tusimple_eval(std::vector<TusimpleFrame>{frame}, cfg);
    CHECK(res.accuracy == 0.0);
    CHECK(res.fp_rate == 1.0);
    CHECK(res.fn_rate == 1.0);
  }

  SUBCASE("mixed frame traced by hand") {
    TusimpleFrame frame;
    for (int r = 0; r < 20; ++r) frame.h_samples.push_back(100.0 + 10.0 * r);
    // Lane 0: 18 of 20 points within tolerance -> 0.9 > 0.85, correct.
    std::vector<double> gt0(20, 200.0), pred0(20, 210.0);
    pred0[0] = 290.0;
    pred0[1] = 290.0;
    // Lane 1: only 10 of 20 close -> 0.5, not correct, but the close points
    // still count toward the accuracy.
    std::vector<double> gt1(20, 500.0), pred1(20, 505.0);
    for (int r = 10; r < 20; ++r) pred1[static_cast<std::size_t>(r)] = 620.0;
    frame.gts = {gt0, gt1};
    frame.preds = {pred0, pred1};
    const TusimpleResult res = tusimple_eval(std::vector<TusimpleFrame>{frame}, cfg);
    CHECK(res.correct_points == 28);
    CHECK(res.gt_points == 40);
    CHECK(res.accuracy == 0.7);  // 28/40 is exact in binary
    CHECK(res.fp_rate == 0.5);   // pred1 is best only for an incorrect lane
    CHECK(res.fn_rate == 0.5);   // lane 1 missed
  }

  SUBCASE("absent points require absence on both sides") {
    TusimpleFrame frame;
    frame.h_samples = {100.0, 110.0, 120.0, 130.0};
    frame.gts = {{300.0, -2.0, 300.0, 300.0}};
    frame.preds = {{300.0, 300.0, -2.0, 300.0}};
    const TusimpleResult res = tusimple_eval(std::vector<TusimpleFrame>{frame}, cfg);
    // 3 present gt points; the pred hits rows 0 and 3 only.
    CHECK(res.gt_points == 3);
    CHECK(res.correct_points == 2);
    CHECK(res.accuracy == doctest::Approx(2.0 / 3.0));
  }

  SUBCASE("no gt points at all count as perfect accuracy") {
    TusimpleFrame frame;
    frame.h_samples = {100.0, 110.0};
    frame.gts = {{-2.0, -2.0}};
    frame.preds = {};
    const TusimpleResult res = tusimple_eval(std::vector<TusimpleFrame>{frame}, cfg);
    CHECK(res.accuracy == 1.0);
    CHECK(res.fn_rate == 1.0);  // the empty lane can never be "correct"
  }

  SUBCASE("row count mismatches are format errors") {
    TusimpleFrame frame;
    frame.h_samples = {100.0, 110.0};
    frame.gts = {{300.0}};
    try {
      tusimple_eval(std::vector<TusimpleFrame>{frame}, cfg);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
    }
  }
}

TEST_CASE("mask and line modes agree for near-vertical lanes") {
  SynthRng rng(8642);
  const LaneGrid grid = make_grid(40, 400.0, 800.0);
  EvalConfig mask_cfg;
  EvalConfig line_cfg;
  line_cfg.iou_mode = IouMode::kLine;
  for (int trial = 0; trial < 15; ++trial) {
    const double x0 = rng.uniform(100.0, 600.0);
    const double slope = rng.uniform(-0.05, 0.05);
    const Lane a = testutil::straight_lane(grid, x0, slope);
    Lane b = testutil::straight_lane(grid, x0 + rng.uniform(-12.0, 12.0),
                                     slope + rng.uniform(-0.01, 0.01));
    const double vm = lane_iou(a, b, mask_cfg);
    const double vl = lane_iou(a, b, line_cfg);
    CAPTURE(trial);
    CHECK(vm == doctest::Approx(vl).epsilon(0.03));
  }
}

TEST_CASE("aggregation across images and categories") {
  std::vector<ImageEval> images;
  ImageEval a;
  a.category = "curve";
  a.counts = {{0.5, 2, 0, 0}};
  ImageEval b;
  b.category = "";
  b.counts = {{0.5, 1, 1, 1}};
  ImageEval c;
  c.category = "crowd";
  c.counts = {{0.5, 0, 3, 0}};
  images = {a, b, c};

  const EvalReport total = aggregate_report(images);
  REQUIRE(total.per_threshold.size() == 1);
  CHECK(total.per_threshold[0].tp == 3);
  CHECK(total.per_threshold[0].fp == 4);
  CHECK(total.per_threshold[0].fn == 1);

  const std::vector<CategoryReport> cats = category_report(images);
  REQUIRE(cats.size() == 3);  // sorted: crowd, curve, uncategorized
  CHECK(cats[0].category == "crowd");
  CHECK(cats[0].fp_only);
  CHECK(cats[0].report.per_threshold[0].fp == 3);
  CHECK(cats[1].category == "curve");
  CHECK(!cats[1].fp_only);
  CHECK(cats[1].report.per_threshold[0].f1 == doctest::Approx(1.0));
  CHECK(cats[2].category == "uncategorized");

  CHECK_THROWS_AS(aggregate_report(std::vector<ImageEval>{}), Error);
}

}  // TEST_SUITE
