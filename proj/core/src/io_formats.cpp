#include "lanekit/io_formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {

namespace {

using nlohmann::ordered_json;

bool parse_double(std::string_view token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

void check_lane_invariants(const std::vector<Point2d>& lane, std::size_t line_no) {
  if (lane.size() < 2)
    raise(ErrorKind::kFormat, "line " + std::to_string(line_no) +
                                  ": lane needs at least 2 points");
  const bool increasing = lane[1].y > lane[0].y;
  for (std::size_t i = 1; i < lane.size(); ++i) {
    const double prev = lane[i - 1].y;
    const double cur = lane[i].y;
    if ((increasing && !(cur > prev)) || (!increasing && !(cur < prev)))
      raise(ErrorKind::kFormat, "line " + std::to_string(line_no) +
                                    ": lane y values must be strictly monotonic");
  }
}

}  // namespace

std::vector<std::vector<Point2d>> parse_culane_lines(std::string_view text) {
  std::vector<std::vector<Point2d>> lanes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<double> values;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      double v;
      if (!parse_double(line.substr(i, j - i), v))
        raise(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                     ": not a number: '" +
                                     std::string(line.substr(i, j - i)) + "'");
      values.push_back(v);
      i = j;
    }
    if (values.empty()) continue;  // blank line
    if (values.size() % 2 != 0)
      raise(ErrorKind::kParse,
            "line " + std::to_string(line_no) + ": odd coordinate count");
    std::vector<Point2d> lane(values.size() / 2);
    for (std::size_t k = 0; k < lane.size(); ++k)
      lane[k] = {values[2 * k], values[2 * k + 1]};
    check_lane_invariants(lane, line_no);
    lanes.push_back(std::move(lane));
  }
  return lanes;
}

std::string write_culane_lines(std::span<const std::vector<Point2d>> lanes) {
  std::string out;
  char buf[64];
  for (const auto& lane : lanes) {
    for (std::size_t i = 0; i < lane.size(); ++i) {
      std::snprintf(buf, sizeof buf, i ? " %.4f %.4f" : "%.4f %.4f", lane[i].x,
                    lane[i].y);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Lane culane_to_lane(std::span<const Point2d> points, const LaneGrid& grid) {
  return resample_to_grid(points, grid);
}

std::vector<Point2d> lane_points(const Lane& lane) {
  std::vector<Point2d> pts;
  for (std::size_t i = 0; i < lane.xs.size(); ++i)
    if (lane.row_valid(i))
      pts.push_back({lane.xs[i], lane.grid.y_at(static_cast<int>(i))});
  return pts;
}

TusimpleRecord parse_tusimple_json(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const std::exception& e) {
    raise(ErrorKind::kParse, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) raise(ErrorKind::kFormat, "record is not a JSON object");

  TusimpleRecord rec;
  if (!j.contains("raw_file") || !j["raw_file"].is_string())
    raise(ErrorKind::kFormat, "missing or invalid key: raw_file");
  rec.raw_file = j["raw_file"].get<std::string>();

  if (!j.contains("h_samples") || !j["h_samples"].is_array())
    raise(ErrorKind::kFormat, "missing or invalid key: h_samples");
  for (const auto& v : j["h_samples"]) {
    if (!v.is_number()) raise(ErrorKind::kFormat, "h_samples entries must be numbers");
    rec.h_samples.push_back(v.get<double>());
  }

  if (!j.contains("lanes") || !j["lanes"].is_array())
    raise(ErrorKind::kFormat, "missing or invalid key: lanes");
  for (const auto& lane : j["lanes"]) {
    if (!lane.is_array()) raise(ErrorKind::kFormat, "lanes entries must be arrays");
    std::vector<double> xs;
    for (const auto& v : lane) {
      if (!v.is_number()) raise(ErrorKind::kFormat, "lane entries must be numbers");
      xs.push_back(v.get<double>());
    }
    if (xs.size() != rec.h_samples.size())
      raise(ErrorKind::kFormat, "lanes: length does not match h_samples");
    rec.lanes.push_back(std::move(xs));
  }

  if (j.contains("run_time")) {
    if (!j["run_time"].is_number())
      raise(ErrorKind::kFormat, "missing or invalid key: run_time");
    rec.run_time = j["run_time"].get<double>();
  }
  return rec;
}

std::string write_tusimple_json(const TusimpleRecord& record) {
  ordered_json j;
  ordered_json lanes = ordered_json::array();
  for (const auto& lane : record.lanes) {
    ordered_json xs = ordered_json::array();
    for (double x : lane) xs.push_back(static_cast<long long>(std::llround(x)));
    lanes.push_back(std::move(xs));
  }
  j["lanes"] = std::move(lanes);
  ordered_json hs = ordered_json::array();
  for (double y : record.h_samples)
    hs.push_back(static_cast<long long>(std::llround(y)));
  j["h_samples"] = std::move(hs);
  j["raw_file"] = record.raw_file;
  if (record.run_time >= 0.0) j["run_time"] = record.run_time;
  return j.dump();
}

std::vector<TusimpleRecord> load_tusimple_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIo, "cannot open file: " + path);
  std::vector<TusimpleRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      records.push_back(parse_tusimple_json(line));
    } catch (const Error& e) {
      raise(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<std::string> load_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIo, "cannot open list file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(line);
  }
  return out;
}

CategorySplit split_categories(
    const std::vector<std::string>& main_list,
    const std::vector<std::pair<std::string, std::string>>& category_files) {
  CategorySplit split;
  const std::set<std::string> known(main_list.begin(), main_list.end());
  for (const auto& [category, file] : category_files) {
    for (const std::string& path : load_list(file)) {
      if (known.count(path)) {
        split.category_of[path] = category;
      } else {
        split.unknown.push_back(path);
      }
    }
  }
  for (const std::string& path : main_list)
    if (!split.category_of.count(path)) split.uncategorized.push_back(path);
  return split;
}

}  // namespace lanekit
