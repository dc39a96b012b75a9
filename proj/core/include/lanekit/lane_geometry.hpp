#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lanekit/error.hpp"

namespace lanekit {

/// Vertical sampling layout shared by lanes and priors. Row 0 is the image
/// top; row i samples the image at y = image_height / (n_points - 1) * i.
struct LaneGrid {
  int n_points = 72;
  double image_height = 590.0;
  double image_width = 1640.0;

  double y_at(int row) const {
    return image_height / (n_points - 1) * row;
  }
  double diagonal() const;
};

void validate_grid(const LaneGrid& grid);
bool same_grid(const LaneGrid& a, const LaneGrid& b);

/// Sentinel stored in Lane::xs for rows where the lane does not exist.
/// Consumers must branch on Lane::valid, never on the sentinel magnitude.
inline constexpr double kInvalidX = -1.0e9;

/// A lane sampled on a LaneGrid: one horizontal coordinate per grid row.
/// Valid rows always form one contiguous run (a lane has one start row at
/// the bottom and one end row at the top).
struct Lane {
  LaneGrid grid;
  std::vector<double> xs;
  std::vector<std::uint8_t> valid;

  bool row_valid(int row) const { return valid[static_cast<std::size_t>(row)] != 0; }
  int first_valid() const;  // smallest valid row index, -1 when empty
  int last_valid() const;   // largest valid row index, -1 when empty
  int valid_count() const;
};

Lane empty_lane(const LaneGrid& grid);
Lane make_lane(const LaneGrid& grid, std::vector<double> xs,
               std::vector<std::uint8_t> valid);
void validate_lane(const Lane& lane);

/// Parameterized lane proposal: a straight ray anchored at the normalized
/// start point with angle theta to the x-axis, plus one horizontal offset
/// per grid row. start_y is measured from the image top; the lane runs from
/// the start row toward the top for `length` rows.
struct LanePrior {
  double score = 0.0;    // foreground probability in [0,1]
  double start_x = 0.5;  // normalized [0,1]
  double start_y = 1.0;  // normalized [0,1], from the image top
  double theta = 1.5707963267948966;  // pi/2 = vertical
  double length = 0.0;   // rows, real-valued during regression
  std::vector<double> offsets;  // pixels, one per grid row
};

void validate_prior(const LanePrior& prior, const LaneGrid& grid);

/// x of the ray at height y (all in pixels). The ray leaves (start_x, start_y)
/// toward the image top; theta = pi/2 is vertical, theta in (pi/2, pi) leans
/// left going up.
double ray_x(double start_x_px, double start_y_px, double theta, double y);

/// Sample the prior onto its grid. Rows run upward from the start row; the
/// lane ends at `length` rows or at the first row whose x leaves [0, W),
/// whichever comes first.
Lane decode_prior(const LanePrior& prior, const LaneGrid& grid);

/// Start point (normalized) and angle of a lane or prior.
struct StartPose {
  double start_x = 0.0;
  double start_y = 0.0;
  double theta = 0.0;
};

StartPose pose_of(const LanePrior& prior);

/// Endpoint-based pose estimate for a sampled lane: start at the bottom-most
/// valid point, theta from the chord to the top-most point.
StartPose derive_pose(const Lane& lane);

struct Point2d {
  double x = 0.0;
  double y = 0.0;
};

/// Linear interpolation of a y-monotonic polyline onto grid rows. Rows
/// outside the polyline's y-range are invalid; xs are kept as interpolated
/// (no [0, W) clipping here).
Lane resample_to_grid(std::span<const Point2d> polyline, const LaneGrid& grid);

/// Bit-per-pixel binary mask; pixel (row, col) is sampled at point (col, row).
/// Tracks the bounding box of set bits (in rows and 64-bit word columns) and
/// a running popcount, so lane masks — narrow bands on a wide canvas —
/// intersect without scanning the empty canvas.
struct BinaryMask {
  int height = 0;
  int width = 0;
  int words_per_row = 0;
  std::vector<std::uint64_t> bits;
  int row_lo = 0, row_hi = -1;    // set-bit row range, empty when lo > hi
  int word_lo = 0, word_hi = -1;  // set-bit word-column range
  std::uint64_t ones = 0;

  void reset(int h, int w);  // resize and clear
  bool test(int row, int col) const;
  void set(int row, int col);
  void set_row_range(int row, int col_lo, int col_hi);  // inclusive
  std::uint64_t count() const { return ones; }
};

/// Thick-line rasterization: sets every pixel within line_width/2 of any
/// segment between consecutive valid points. Lanes with fewer than two valid
/// points produce an empty mask.
void rasterize(const Lane& lane, double line_width, int canvas_height,
               int canvas_width, BinaryMask* out);
BinaryMask rasterize(const Lane& lane, double line_width, int canvas_height,
                     int canvas_width);

std::uint64_t intersection_count(const BinaryMask& a, const BinaryMask& b);
std::uint64_t union_count(const BinaryMask& a, const BinaryMask& b);

/// |a and b| / |a or b|; 0 when both masks are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace lanekit
