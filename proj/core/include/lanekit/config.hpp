#pragma once

#include <string>
#include <string_view>

#include "lanekit/assignment.hpp"
#include "lanekit/lane_geometry.hpp"
#include "lanekit/liou.hpp"
#include "lanekit/losses.hpp"
#include "lanekit/metrics.hpp"

namespace lanekit {

/// Every tunable default in one place. The assignment block re-uses the
/// focal parameters and IoU radius, so those are synchronized after loading.
struct Config {
  LaneGrid grid{};
  int n_samples = 36;  // ROI sample count
  LiouConfig liou{};
  FocalParams focal{};
  LossWeights loss{};
  AssignCostConfig assign{};
  double score_thresh = 0.4;    // inference filtering
  double nms_iou_thresh = 0.5;  // lane NMS
  EvalConfig eval{};
};

Config default_config();

void validate_config(const Config& cfg);

/// Layer a JSON document over cfg. Unknown keys anywhere in the document are
/// config errors naming the full key path; type mismatches likewise.
void apply_config_text(Config& cfg, std::string_view json_text);

/// defaults -> file. Missing file is an I/O error.
Config load_config_file(const std::string& path);

std::string config_to_json_text(const Config& cfg);

}  // namespace lanekit
