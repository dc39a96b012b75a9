#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lanekit/liou.hpp"
#include "lanekit/synth.hpp"
#include "test_util.hpp"

using namespace lanekit;
using testutil::make_grid;

namespace {

LiouResult flat_case(double pred, double gt, int n, double e) {
  const std::vector<double> p(static_cast<std::size_t>(n), pred);
  const std::vector<double> g(static_cast<std::size_t>(n), gt);
  const std::vector<std::uint8_t> rows(static_cast<std::size_t>(n), 1);
  return line_iou(p, g, rows, e);
}

}  // namespace

TEST_SUITE("liou") {

TEST_CASE("segment pieces follow the closed form") {
  SegmentIou s = segment_iou(30.0, 30.0, 15.0);
  CHECK(s.overlap == doctest::Approx(30.0));
  CHECK(s.union_len == doctest::Approx(30.0));

  s = segment_iou(10.0, 14.0, 15.0);
  CHECK(s.overlap == doctest::Approx(26.0));
  CHECK(s.union_len == doctest::Approx(34.0));

  // Separated by more than 2e: overlap goes negative.
  s = segment_iou(0.0, 60.0, 15.0);
  CHECK(s.overlap == doctest::Approx(-30.0));
  CHECK(s.union_len == doctest::Approx(90.0));

  // overlap + union = 4e regardless of the offset.
  for (double dx : {0.0, 3.7, 29.9, 31.0, 250.0}) {
    s = segment_iou(100.0, 100.0 + dx, 15.0);
    CHECK(s.overlap + s.union_len == doctest::Approx(60.0));
    const SegmentIou m = segment_iou(100.0, 100.0 - dx, 15.0);
    CHECK(m.overlap == doctest::Approx(s.overlap));
  }

  CHECK_THROWS_AS(segment_iou(0.0, 0.0, 0.0), Error);
}

TEST_CASE("ten pixels apart at radius 15 scores one half") {
  const LiouResult r = flat_case(0.0, 10.0, 1, 15.0);
  CHECK(r.value == doctest::Approx(0.5));
  CHECK(r.loss() == doctest::Approx(0.5));
  // d(value)/dx = (U + O)/U^2 = 60/1600 since pred sits left of gt.
  CHECK(r.grad_pred[0] == doctest::Approx(0.0375));

  // More rows scale the gradient down but keep the value.
  const LiouResult r4 = flat_case(0.0, 10.0, 4, 15.0);
  CHECK(r4.value == doctest::Approx(0.5));
  for (double g : r4.grad_pred) CHECK(g == doctest::Approx(0.009375));

  // Pred right of gt: gradient flips sign.
  const LiouResult rr = flat_case(20.0, 10.0, 1, 15.0);
  CHECK(rr.value == doctest::Approx(0.5));
  CHECK(rr.grad_pred[0] == doctest::Approx(-0.0375));
}

TEST_CASE("perfect match scores one with a zero gradient") {
  const std::vector<double> xs = {3.0, 14.0, 15.9, 200.5};
  const std::vector<std::uint8_t> rows(4, 1);
  const LiouResult r = line_iou(xs, xs, rows, 15.0);
  CHECK(r.value == 1.0);
  for (double g : r.grad_pred) CHECK(g == 0.0);
}

TEST_CASE("swapping pred and gt keeps the value and mirrors the gradient") {
  const std::vector<double> p = {10.0, 22.0, 31.5};
  const std::vector<double> g = {12.0, 18.0, 40.0};
  const std::vector<std::uint8_t> rows(3, 1);
  const LiouResult a = line_iou(p, g, rows, 15.0);
  const LiouResult b = line_iou(g, p, rows, 15.0);
  CHECK(a.value == doctest::Approx(b.value));
  for (int i = 0; i < 3; ++i) {
    CHECK(a.grad_pred[static_cast<std::size_t>(i)] ==
          doctest::Approx(-b.grad_pred[static_cast<std::size_t>(i)]));
  }
}

TEST_CASE("value stays within [-1, 1] and decays with separation") {
  double prev = 1.0;
  for (double dx : {0.0, 5.0, 15.0, 30.0, 60.0, 200.0, 600.0, 1.0e6}) {
    const LiouResult r = flat_case(0.0, dx, 3, 15.0);
    CHECK(r.value <= 1.0);
    CHECK(r.value >= -1.0);
    CHECK(r.value <= prev + 1e-12);
    prev = r.value;
  }
  // 40e separation: well into the negative saturation zone.
  CHECK(flat_case(0.0, 40.0 * 15.0, 3, 15.0).value < -0.9);
}

TEST_CASE("row mask selects which rows count") {
  const std::vector<double> p = {0.0, 999.0, 0.0};
  const std::vector<double> g = {10.0, -999.0, 10.0};
  const std::vector<std::uint8_t> rows = {1, 0, 1};
  const LiouResult r = line_iou(p, g, rows, 15.0);
  CHECK(r.value == doctest::Approx(0.5));  // masked row never contributes
  CHECK(r.grad_pred[1] == 0.0);
  CHECK(r.per_point_union[1] == 0.0);
}

TEST_CASE("input validation") {
  const std::vector<double> p = {0.0, 1.0};
  const std::vector<double> g = {0.0};
  const std::vector<std::uint8_t> rows = {1, 1};
  CHECK_THROWS_AS(line_iou(p, g, rows, 15.0), Error);

  const std::vector<double> g2 = {0.0, 1.0};
  const std::vector<std::uint8_t> none = {0, 0};
  try {
    line_iou(p, g2, none, 15.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDomain);
  }
  CHECK_THROWS_AS(line_iou(p, g2, rows, -1.0), Error);
}

TEST_CASE("analytic gradient matches central differences") {
  SynthRng rng(20240817);
  const double e = 15.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 6);
    std::vector<double> p(static_cast<std::size_t>(n));
    std::vector<double> g(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> rows(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < n; ++i) {
      p[static_cast<std::size_t>(i)] = rng.uniform(0.0, 400.0);
      // Keep a comfortable distance from the tie so finite differences do
      // not straddle the kink.
      g[static_cast<std::size_t>(i)] =
          p[static_cast<std::size_t>(i)] +
          (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 25.0);
    }
    const LiouResult r = line_iou(p, g, rows, e);
    for (int i = 0; i < n; ++i) {
      std::vector<double> lo = p, hi = p;
      lo[static_cast<std::size_t>(i)] -= h;
      hi[static_cast<std::size_t>(i)] += h;
      const double fd = (line_iou(hi, g, rows, e).value -
                         line_iou(lo, g, rows, e).value) /
                        (2.0 * h);
      CHECK(r.grad_pred[static_cast<std::size_t>(i)] ==
            doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("lane overload uses the shared rows") {
  const LaneGrid grid = make_grid(5, 100.0, 200.0);
  // pred valid on rows 1..4, gt on rows 2..4; identical xs where shared.
  const Lane pred = testutil::lane_from_run(grid, 4, {50.0, 60.0, 70.0, 80.0});
  const Lane gt = testutil::lane_from_run(grid, 4, {50.0, 60.0, 70.0});

  LiouConfig cfg;
  const LiouResult shared = line_iou(pred, gt, cfg);
  CHECK(shared.value == doctest::Approx(1.0));

  SUBCASE("one-sided rows become a fixed penalty when enabled") {
    LiouConfig uni = cfg;
    uni.union_rows = true;
    const LiouResult r = line_iou(pred, gt, uni);
    // Three shared rows at (30, 30) each plus one penalty row (-30, +30):
    // value = 60 / 120.
    CHECK(r.value == doctest::Approx(0.5));
    for (double g : r.grad_pred) CHECK(g == 0.0);
    CHECK(r.per_point_overlap[1] == doctest::Approx(-30.0));
    CHECK(r.per_point_union[1] == doctest::Approx(30.0));
  }

  SUBCASE("penalty rows keep a zero gradient even when shifted") {
    LiouConfig uni = cfg;
    uni.union_rows = true;
    Lane moved = pred;
    for (std::size_t i = 0; i < moved.xs.size(); ++i) {
      if (moved.row_valid(static_cast<int>(i))) moved.xs[i] += 4.0;
    }
    const LiouResult r = line_iou(moved, gt, uni);
    CHECK(r.grad_pred[1] == 0.0);      // pred-only row
    CHECK(r.grad_pred[2] != 0.0);      // shared row feels the shift
  }

  SUBCASE("disjoint runs raise a domain error") {
    const Lane top = testutil::lane_from_run(grid, 1, {10.0, 20.0});
    const Lane bottom = testutil::lane_from_run(grid, 4, {10.0, 20.0});
    CHECK_THROWS_AS(line_iou(top, bottom, cfg), Error);
    LiouConfig uni = cfg;
    uni.union_rows = true;
    // With union rows the one-sided rows still make the score defined.
    const LiouResult r = line_iou(top, bottom, uni);
    CHECK(r.value == doctest::Approx(-1.0));
  }

  SUBCASE("grid mismatch is a dimension error") {
    const Lane other = empty_lane(make_grid(7, 100.0, 200.0));
    CHECK_THROWS_AS(line_iou(pred, other, cfg), Error);
  }
}

TEST_CASE("overlap score for suppression") {
  const LaneGrid grid = make_grid(6, 100.0, 300.0);
  const Lane a = testutil::straight_lane(grid, 150.0, 0.1);
  CHECK(liou_overlap(a, a, 15.0) == doctest::Approx(1.0));

  Lane b = a;
  for (std::size_t i = 0; i < b.xs.size(); ++i) b.xs[i] += 10.0;
  CHECK(liou_overlap(a, b, 15.0) == doctest::Approx(0.5));

  const Lane top = testutil::lane_from_run(grid, 1, {10.0, 20.0});
  const Lane bottom = testutil::lane_from_run(grid, 5, {10.0, 20.0});
  CHECK(liou_overlap(top, bottom, 15.0) == -1.0);
}

TEST_CASE("metric-mode IoU clamps to set semantics") {
  const LaneGrid grid = make_grid(5, 100.0, 200.0);
  const Lane pred = testutil::lane_from_run(grid, 4, {50.0, 60.0, 70.0, 80.0});
  const Lane gt = testutil::lane_from_run(grid, 4, {50.0, 60.0, 70.0});

  // Identical on 3 shared rows (3 * 30 intersection), one extra pred row
  // adds 30 of union only.
  CHECK(line_iou_metric(pred, gt, 15.0) == doctest::Approx(0.75));
  CHECK(line_iou_metric(gt, pred, 15.0) == doctest::Approx(0.75));
  CHECK(line_iou_metric(gt, gt, 15.0) == doctest::Approx(1.0));

  // Far-apart rows saturate: intersection 0, union capped at 4e per row.
  Lane far = gt;
  for (std::size_t i = 0; i < far.xs.size(); ++i) {
    if (far.row_valid(static_cast<int>(i))) far.xs[i] += 1000.0;
  }
  CHECK(line_iou_metric(gt, far, 15.0) == 0.0);

  // Never negative, unlike the training-side score.
  CHECK(line_iou_metric(pred, far, 15.0) >= 0.0);

  // Empty lanes have an empty union.
  CHECK(line_iou_metric(empty_lane(grid), empty_lane(grid), 15.0) == 0.0);
  CHECK(line_iou_metric(gt, empty_lane(grid), 15.0) == 0.0);
}

}  // TEST_SUITE
