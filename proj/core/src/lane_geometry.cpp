#include "lanekit/lane_geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace lanekit {

double LaneGrid::diagonal() const {
  return std::hypot(image_width, image_height);
}

void validate_grid(const LaneGrid& grid) {
  if (grid.n_points < 2) {
    raise(ErrorKind::kConfig,
          "grid n_points must be >= 2, got " + std::to_string(grid.n_points));
  }
  if (!(grid.image_height > 0.0) || !(grid.image_width > 0.0)) {
    raise(ErrorKind::kConfig, "grid image dimensions must be positive");
  }
}

bool same_grid(const LaneGrid& a, const LaneGrid& b) {
  return a.n_points == b.n_points && a.image_height == b.image_height &&
         a.image_width == b.image_width;
}

int Lane::first_valid() const {
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (valid[i]) return static_cast<int>(i);
  }
  return -1;
}

int Lane::last_valid() const {
  for (std::size_t i = valid.size(); i > 0; --i) {
    if (valid[i - 1]) return static_cast<int>(i - 1);
  }
  return -1;
}

int Lane::valid_count() const {
  int n = 0;
  for (std::uint8_t v : valid) n += v ? 1 : 0;
  return n;
}

Lane empty_lane(const LaneGrid& grid) {
  validate_grid(grid);
  Lane lane;
  lane.grid = grid;
  lane.xs.assign(static_cast<std::size_t>(grid.n_points), kInvalidX);
  lane.valid.assign(static_cast<std::size_t>(grid.n_points), 0);
  return lane;
}

Lane make_lane(const LaneGrid& grid, std::vector<double> xs,
               std::vector<std::uint8_t> valid) {
  Lane lane;
  lane.grid = grid;
  lane.xs = std::move(xs);
  lane.valid = std::move(valid);
  validate_lane(lane);
  return lane;
}

void validate_lane(const Lane& lane) {
  validate_grid(lane.grid);
  const auto n = static_cast<std::size_t>(lane.grid.n_points);
  if (lane.xs.size() != n || lane.valid.size() != n) {
    raise(ErrorKind::kDimension,
          "lane arrays must have exactly n_points entries");
  }
  const int first = lane.first_valid();
  const int last = lane.last_valid();
  if (first < 0) return;
  for (int i = first; i <= last; ++i) {
    if (!lane.row_valid(i)) {
      raise(ErrorKind::kDomain,
            "lane validity must form one contiguous run, hole at row " +
                std::to_string(i));
    }
  }
}

void validate_prior(const LanePrior& prior, const LaneGrid& grid) {
  validate_grid(grid);
  if (static_cast<int>(prior.offsets.size()) != grid.n_points) {
    raise(ErrorKind::kDimension,
          "prior has " + std::to_string(prior.offsets.size()) +
              " offsets, grid expects " + std::to_string(grid.n_points));
  }
  if (!(prior.score >= 0.0 && prior.score <= 1.0)) {
    raise(ErrorKind::kDomain, "prior score must lie in [0,1]");
  }
}

double ray_x(double start_x_px, double start_y_px, double theta, double y) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  if (std::abs(s) < 1e-12) {
    // Horizontal ray: undefined x at any other height; report far out of
    // bounds so all rows decode as invalid.
    return -std::numeric_limits<double>::infinity();
  }
  return start_x_px + (start_y_px - y) * (c / s);
}

Lane decode_prior(const LanePrior& prior, const LaneGrid& grid) {
  validate_prior(prior, grid);
  Lane lane = empty_lane(grid);

  const double x0 = prior.start_x * grid.image_width;
  const double y0 = prior.start_y * grid.image_height;
  const int n = grid.n_points;
  const long start_row = std::clamp<long>(
      std::lround(prior.start_y * (n - 1)), 0, n - 1);
  const long want = std::lround(prior.length);
  if (want <= 0) return lane;

  // Walk upward; the lane ends at the first row whose x leaves [0, W).
  for (long i = start_row; i >= 0 && start_row - i < want; --i) {
    const double x =
        ray_x(x0, y0, prior.theta, grid.y_at(static_cast<int>(i))) +
        prior.offsets[static_cast<std::size_t>(i)];
    if (!(x >= 0.0 && x < grid.image_width)) break;
    lane.xs[static_cast<std::size_t>(i)] = x;
    lane.valid[static_cast<std::size_t>(i)] = 1;
  }
  return lane;
}

StartPose pose_of(const LanePrior& prior) {
  return {prior.start_x, prior.start_y, prior.theta};
}

StartPose derive_pose(const Lane& lane) {
  const int bottom = lane.last_valid();
  if (bottom < 0) {
    raise(ErrorKind::kDomain, "cannot derive a pose from an empty lane");
  }
  const int top = lane.first_valid();
  StartPose pose;
  pose.start_x = lane.xs[static_cast<std::size_t>(bottom)] / lane.grid.image_width;
  pose.start_y = lane.grid.y_at(bottom) / lane.grid.image_height;
  if (top == bottom) {
    pose.theta = 1.5707963267948966;
    return pose;
  }
  const double dy = lane.grid.y_at(bottom) - lane.grid.y_at(top);
  const double dx = lane.xs[static_cast<std::size_t>(top)] -
                    lane.xs[static_cast<std::size_t>(bottom)];
  pose.theta = std::atan2(dy, dx);  // in (0, pi) since dy > 0
  return pose;
}

Lane resample_to_grid(std::span<const Point2d> polyline, const LaneGrid& grid) {
  Lane lane = empty_lane(grid);
  if (polyline.size() < 2) return lane;

  // Normalize to increasing y.
  std::vector<Point2d> pts(polyline.begin(), polyline.end());
  if (pts.front().y > pts.back().y) {
    std::reverse(pts.begin(), pts.end());
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i].y > pts[i - 1].y)) {
      raise(ErrorKind::kDomain, "polyline y must be strictly monotonic");
    }
  }

  const double y_min = pts.front().y;
  const double y_max = pts.back().y;
  std::size_t seg = 0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double y = grid.y_at(i);
    if (y < y_min || y > y_max) continue;
    while (seg + 2 < pts.size() && pts[seg + 1].y < y) ++seg;
    const Point2d& a = pts[seg];
    const Point2d& b = pts[seg + 1];
    const double t = (y - a.y) / (b.y - a.y);
    lane.xs[static_cast<std::size_t>(i)] = a.x + t * (b.x - a.x);
    lane.valid[static_cast<std::size_t>(i)] = 1;
  }
  return lane;
}

void BinaryMask::reset(int h, int w) {
  height = h;
  width = w;
  words_per_row = (w + 63) / 64;
  bits.assign(static_cast<std::size_t>(h) * words_per_row, 0);
  row_lo = h;
  row_hi = -1;
  word_lo = words_per_row;
  word_hi = -1;
  ones = 0;
}

bool BinaryMask::test(int row, int col) const {
  const std::size_t idx =
      static_cast<std::size_t>(row) * words_per_row + (col >> 6);
  return (bits[idx] >> (col & 63)) & 1u;
}

void BinaryMask::set(int row, int col) { set_row_range(row, col, col); }

void BinaryMask::set_row_range(int row, int col_lo, int col_hi) {
  if (col_lo > col_hi) return;
  const std::size_t base = static_cast<std::size_t>(row) * words_per_row;
  const int w_lo = col_lo >> 6;
  const int w_hi = col_hi >> 6;
  const std::uint64_t all = ~std::uint64_t{0};
  const std::uint64_t lo_mask = all << (col_lo & 63);
  const std::uint64_t hi_mask = all >> (63 - (col_hi & 63));
  for (int w = w_lo; w <= w_hi; ++w) {
    std::uint64_t m = all;
    if (w == w_lo) m &= lo_mask;
    if (w == w_hi) m &= hi_mask;
    std::uint64_t& word = bits[base + static_cast<std::size_t>(w)];
    ones += static_cast<std::uint64_t>(std::popcount(m & ~word));
    word |= m;
  }
  row_lo = std::min(row_lo, row);
  row_hi = std::max(row_hi, row);
  word_lo = std::min(word_lo, w_lo);
  word_hi = std::max(word_hi, w_hi);
}

namespace {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
};

void interval_add(Interval* acc, double lo, double hi) {
  if (lo > hi) return;
  if (acc->empty) {
    acc->lo = lo;
    acc->hi = hi;
    acc->empty = false;
  } else {
    acc->lo = std::min(acc->lo, lo);
    acc->hi = std::max(acc->hi, hi);
  }
}

// Solve p*x + q in [u, v] for x; returns false when no x satisfies it.
bool linear_range(double p, double q, double u, double v, double* lo,
                  double* hi) {
  if (p == 0.0) {
    if (q < u || q > v) return false;
    *lo = -std::numeric_limits<double>::infinity();
    *hi = std::numeric_limits<double>::infinity();
    return true;
  }
  double a = (u - q) / p;
  double b = (v - q) / p;
  if (a > b) std::swap(a, b);
  *lo = a;
  *hi = b;
  return true;
}

// x-interval of { (x, y) : dist((x, y), segment AB) <= r } at fixed y.
// The set is a capsule, so the slice is a single interval: the union of the
// two end-cap discs and the perpendicular band restricted to the segment.
Interval capsule_row_interval(double ax, double ay, double bx, double by,
                              double r, double y) {
  Interval acc;
  const double dya = y - ay;
  if (std::abs(dya) <= r) {
    const double s = std::sqrt(r * r - dya * dya);
    interval_add(&acc, ax - s, ax + s);
  }
  const double dyb = y - by;
  if (std::abs(dyb) <= r) {
    const double s = std::sqrt(r * r - dyb * dyb);
    interval_add(&acc, bx - s, bx + s);
  }

  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  if (len2 > 0.0) {
    const double len = std::sqrt(len2);
    // Band: |(x-ax)*dy - (y-ay)*dx| <= r*len, linear in x.
    double b_lo, b_hi;
    const bool band_ok =
        linear_range(dy, -(y - ay) * dx, -r * len, r * len, &b_lo, &b_hi);
    // Projection within the segment: 0 <= (x-ax)*dx + (y-ay)*dy <= len2.
    double t_lo, t_hi;
    const bool t_ok = linear_range(dx, (y - ay) * dy, 0.0, len2, &t_lo, &t_hi);
    if (band_ok && t_ok) {
      const double lo = std::max(b_lo, t_lo) + ax;
      const double hi = std::min(b_hi, t_hi) + ax;
      interval_add(&acc, lo, hi);
    }
  }
  return acc;
}

}  // namespace

void rasterize(const Lane& lane, double line_width, int canvas_height,
               int canvas_width, BinaryMask* out) {
  if (!(line_width >= 1.0)) {
    raise(ErrorKind::kDomain, "line_width must be >= 1");
  }
  out->reset(canvas_height, canvas_width);
  const int first = lane.first_valid();
  const int last = lane.last_valid();
  if (first < 0 || first == last) return;

  const double r = line_width / 2.0;
  for (int i = first; i < last; ++i) {
    const double ax = lane.xs[static_cast<std::size_t>(i)];
    const double ay = lane.grid.y_at(i);
    const double bx = lane.xs[static_cast<std::size_t>(i + 1)];
    const double by = lane.grid.y_at(i + 1);

    const int r0 = std::max(
        0, static_cast<int>(std::ceil(std::min(ay, by) - r)));
    const int r1 = std::min(
        canvas_height - 1, static_cast<int>(std::floor(std::max(ay, by) + r)));
    for (int row = r0; row <= r1; ++row) {
      const Interval iv =
          capsule_row_interval(ax, ay, bx, by, r, static_cast<double>(row));
      if (iv.empty) continue;
      const int c0 = std::max(0, static_cast<int>(std::ceil(iv.lo)));
      const int c1 =
          std::min(canvas_width - 1, static_cast<int>(std::floor(iv.hi)));
      out->set_row_range(row, c0, c1);
    }
  }
}

BinaryMask rasterize(const Lane& lane, double line_width, int canvas_height,
                     int canvas_width) {
  BinaryMask mask;
  rasterize(lane, line_width, canvas_height, canvas_width, &mask);
  return mask;
}

std::uint64_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width) {
    raise(ErrorKind::kDimension, "mask intersection requires equal shapes");
  }
  const int r_lo = std::max(a.row_lo, b.row_lo);
  const int r_hi = std::min(a.row_hi, b.row_hi);
  const int w_lo = std::max(a.word_lo, b.word_lo);
  const int w_hi = std::min(a.word_hi, b.word_hi);
  std::uint64_t n = 0;
  for (int row = r_lo; row <= r_hi; ++row) {
    const std::size_t base = static_cast<std::size_t>(row) * a.words_per_row;
    for (int w = w_lo; w <= w_hi; ++w) {
      const std::size_t i = base + static_cast<std::size_t>(w);
      n += static_cast<std::uint64_t>(std::popcount(a.bits[i] & b.bits[i]));
    }
  }
  return n;
}

std::uint64_t union_count(const BinaryMask& a, const BinaryMask& b) {
  return a.count() + b.count() - intersection_count(a, b);
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const std::uint64_t inter = intersection_count(a, b);
  const std::uint64_t uni = a.count() + b.count() - inter;
  if (uni == 0) return 0.0;  // two empty masks never match
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace lanekit
