#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lanekit/lane_geometry.hpp"

namespace lanekit {

/// One annotation/prediction file: polylines in pixel coordinates,
/// y strictly monotonic within each lane, at least two points per lane.
struct CulaneRecord {
  std::string image_path;
  std::vector<std::vector<Point2d>> lanes;
};

/// Parse "x1 y1 x2 y2 ..." lines, one lane per non-blank line. Tokenization
/// failures report the 1-based line number; lanes violating the record
/// invariants are format errors.
std::vector<std::vector<Point2d>> parse_culane_lines(std::string_view text);

/// 4-decimal fixed-point output, one lane per line.
std::string write_culane_lines(std::span<const std::vector<Point2d>> lanes);

/// Resample a polyline onto the evaluation grid (linear in y).
Lane culane_to_lane(std::span<const Point2d> points, const LaneGrid& grid);

/// (x, y) pairs of a sampled lane's valid rows, top to bottom.
std::vector<Point2d> lane_points(const Lane& lane);

/// One JSON-lines record: x per sampled row for each lane, -2 = absent.
struct TusimpleRecord {
  std::string raw_file;
  std::vector<double> h_samples;
  std::vector<std::vector<double>> lanes;
  double run_time = -1.0;  // optional field, < 0 when absent
};

TusimpleRecord parse_tusimple_json(std::string_view line);

/// Integer-valued JSON on one line (x rounded to nearest integer).
std::string write_tusimple_json(const TusimpleRecord& record);

/// All records of a JSON-lines file (blank lines skipped).
std::vector<TusimpleRecord> load_tusimple_file(const std::string& path);

/// Ordered line list; trailing CR stripped, blank lines skipped, duplicates
/// preserved.
std::vector<std::string> load_list(const std::string& path);

/// Result of splitting a main list by per-category list files.
struct CategorySplit {
  std::map<std::string, std::string> category_of;    // path -> category
  std::vector<std::string> uncategorized;            // in main list only
  std::vector<std::string> unknown;                  // categorized, not in main list
};

CategorySplit split_categories(
    const std::vector<std::string>& main_list,
    const std::vector<std::pair<std::string, std::string>>& category_files);

}  // namespace lanekit
