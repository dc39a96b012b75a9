#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "lanekit/lane_geometry.hpp"
#include "lanekit/synth.hpp"

namespace testutil {

inline lanekit::LaneGrid make_grid(int n_points, double height, double width) {
  lanekit::LaneGrid grid;
  grid.n_points = n_points;
  grid.image_height = height;
  grid.image_width = width;
  return grid;
}

/// Lane whose xs are given bottom-up over [row_lo, row_hi]; other rows
/// invalid. xs_bottom_up[0] lands on row_hi (the image bottom end).
inline lanekit::Lane lane_from_run(const lanekit::LaneGrid& grid, int row_hi,
                                   const std::vector<double>& xs_bottom_up) {
  lanekit::Lane lane = lanekit::empty_lane(grid);
  for (std::size_t i = 0; i < xs_bottom_up.size(); ++i) {
    const int row = row_hi - static_cast<int>(i);
    lane.xs[static_cast<std::size_t>(row)] = xs_bottom_up[i];
    lane.valid[static_cast<std::size_t>(row)] = 1;
  }
  return lane;
}

/// Full-height lane: x(row) = x_bottom + slope * (bottom_y - y(row)).
inline lanekit::Lane straight_lane(const lanekit::LaneGrid& grid, double x_bottom,
                                   double slope) {
  lanekit::Lane lane = lanekit::empty_lane(grid);
  const double y_bottom = grid.y_at(grid.n_points - 1);
  for (int row = 0; row < grid.n_points; ++row) {
    const double x = x_bottom + slope * (y_bottom - grid.y_at(row));
    if (!(x >= 0.0 && x < grid.image_width)) continue;
    lane.xs[static_cast<std::size_t>(row)] = x;
    lane.valid[static_cast<std::size_t>(row)] = 1;
  }
  return lane;
}

inline bool bits_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace testutil
