#include "lanekit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void bad_key(const std::string& path) {
  raise(ErrorKind::kConfig, "unknown config key: " + path);
}

double as_double(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) raise(ErrorKind::kConfig, "config key " + path + " must be a number");
  return v.get<double>();
}

int as_int(const ordered_json& v, const std::string& path) {
  if (!v.is_number_integer())
    raise(ErrorKind::kConfig, "config key " + path + " must be an integer");
  return v.get<int>();
}

bool as_bool(const ordered_json& v, const std::string& path) {
  if (!v.is_boolean())
    raise(ErrorKind::kConfig, "config key " + path + " must be a boolean");
  return v.get<bool>();
}

void expect_object(const ordered_json& v, const std::string& path) {
  if (!v.is_object())
    raise(ErrorKind::kConfig, "config key " + path + " must be an object");
}

void apply_grid(LaneGrid& grid, const ordered_json& j) {
  expect_object(j, "grid");
  for (const auto& [key, value] : j.items()) {
    if (key == "n_points")
      grid.n_points = as_int(value, "grid.n_points");
    else if (key == "image_height")
      grid.image_height = as_double(value, "grid.image_height");
    else if (key == "image_width")
      grid.image_width = as_double(value, "grid.image_width");
    else
      bad_key("grid." + key);
  }
}

void apply_liou(LiouConfig& liou, const ordered_json& j) {
  expect_object(j, "liou");
  for (const auto& [key, value] : j.items()) {
    if (key == "radius_e")
      liou.radius_e = as_double(value, "liou.radius_e");
    else if (key == "union_rows")
      liou.union_rows = as_bool(value, "liou.union_rows");
    else
      bad_key("liou." + key);
  }
}

void apply_focal(FocalParams& focal, const ordered_json& j) {
  expect_object(j, "focal");
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha")
      focal.alpha = as_double(value, "focal.alpha");
    else if (key == "gamma")
      focal.gamma = as_double(value, "focal.gamma");
    else
      bad_key("focal." + key);
  }
}

void apply_loss(LossWeights& loss, const ordered_json& j) {
  expect_object(j, "loss");
  for (const auto& [key, value] : j.items()) {
    if (key == "w_cls")
      loss.w_cls = as_double(value, "loss.w_cls");
    else if (key == "w_xytl")
      loss.w_xytl = as_double(value, "loss.w_xytl");
    else if (key == "w_liou")
      loss.w_liou = as_double(value, "loss.w_liou");
    else
      bad_key("loss." + key);
  }
}

void apply_assign(AssignCostConfig& assign, const ordered_json& j) {
  expect_object(j, "assign");
  for (const auto& [key, value] : j.items()) {
    if (key == "w_sim")
      assign.w_sim = as_double(value, "assign.w_sim");
    else if (key == "w_cls")
      assign.w_cls = as_double(value, "assign.w_cls");
    else if (key == "k_max")
      assign.k_max = as_int(value, "assign.k_max");
    else if (key == "one_to_one")
      assign.one_to_one = as_bool(value, "assign.one_to_one");
    else
      bad_key("assign." + key);
  }
}

void apply_nms(Config& cfg, const ordered_json& j) {
  expect_object(j, "nms");
  for (const auto& [key, value] : j.items()) {
    if (key == "score_thresh")
      cfg.score_thresh = as_double(value, "nms.score_thresh");
    else if (key == "iou_thresh")
      cfg.nms_iou_thresh = as_double(value, "nms.iou_thresh");
    else
      bad_key("nms." + key);
  }
}

void apply_eval(EvalConfig& eval, const ordered_json& j) {
  expect_object(j, "eval");
  for (const auto& [key, value] : j.items()) {
    if (key == "iou_mode") {
      if (!value.is_string())
        raise(ErrorKind::kConfig, "config key eval.iou_mode must be a string");
      const std::string mode = value.get<std::string>();
      if (mode == "mask")
        eval.iou_mode = IouMode::kMask;
      else if (mode == "line")
        eval.iou_mode = IouMode::kLine;
      else
        raise(ErrorKind::kConfig, "eval.iou_mode must be 'mask' or 'line'");
    } else if (key == "line_width") {
      eval.line_width = as_double(value, "eval.line_width");
    } else if (key == "thresholds") {
      if (!value.is_array())
        raise(ErrorKind::kConfig, "config key eval.thresholds must be an array");
      eval.thresholds.clear();
      for (const auto& t : value)
        eval.thresholds.push_back(as_double(t, "eval.thresholds[]"));
    } else if (key == "tusimple_pixel_tol") {
      eval.tusimple_pixel_tol = as_double(value, "eval.tusimple_pixel_tol");
    } else if (key == "tusimple_point_frac") {
      eval.tusimple_point_frac = as_double(value, "eval.tusimple_point_frac");
    } else if (key == "strict_greater") {
      eval.strict_greater = as_bool(value, "eval.strict_greater");
    } else {
      bad_key("eval." + key);
    }
  }
}

}  // namespace

Config default_config() { return Config{}; }

void validate_config(const Config& cfg) {
  validate_grid(cfg.grid);
  if (cfg.n_samples < 1) raise(ErrorKind::kConfig, "n_samples must be >= 1");
  if (!(cfg.liou.radius_e > 0.0)) raise(ErrorKind::kConfig, "liou.radius_e must be > 0");
  if (!(cfg.focal.alpha > 0.0 && cfg.focal.alpha <= 1.0))
    raise(ErrorKind::kConfig, "focal.alpha must be in (0, 1]");
  if (cfg.focal.gamma < 0.0) raise(ErrorKind::kConfig, "focal.gamma must be >= 0");
  if (cfg.loss.w_cls < 0.0 || cfg.loss.w_xytl < 0.0 || cfg.loss.w_liou < 0.0)
    raise(ErrorKind::kConfig, "loss weights must be >= 0");
  if (cfg.assign.k_max < 1) raise(ErrorKind::kConfig, "assign.k_max must be >= 1");
  if (cfg.assign.w_sim < 0.0 || cfg.assign.w_cls < 0.0)
    raise(ErrorKind::kConfig, "assign weights must be >= 0");
  if (!(cfg.score_thresh >= 0.0 && cfg.score_thresh <= 1.0))
    raise(ErrorKind::kConfig, "nms.score_thresh must be in [0, 1]");
  if (!(cfg.nms_iou_thresh >= -1.0 && cfg.nms_iou_thresh <= 1.0))
    raise(ErrorKind::kConfig, "nms.iou_thresh must be in [-1, 1]");
  validate_eval_config(cfg.eval);
}

void apply_config_text(Config& cfg, std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    raise(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) raise(ErrorKind::kConfig, "config root must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "grid")
      apply_grid(cfg.grid, value);
    else if (key == "n_samples")
      cfg.n_samples = as_int(value, "n_samples");
    else if (key == "liou")
      apply_liou(cfg.liou, value);
    else if (key == "focal")
      apply_focal(cfg.focal, value);
    else if (key == "loss")
      apply_loss(cfg.loss, value);
    else if (key == "assign")
      apply_assign(cfg.assign, value);
    else if (key == "nms")
      apply_nms(cfg, value);
    else if (key == "eval")
      apply_eval(cfg.eval, value);
    else
      bad_key(key);
  }
  // The assignment stage shares these knobs.
  cfg.assign.focal = cfg.focal;
  cfg.assign.radius_e = cfg.liou.radius_e;
  validate_config(cfg);
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIo, "cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Config cfg = default_config();
  apply_config_text(cfg, buf.str());
  return cfg;
}

std::string config_to_json_text(const Config& cfg) {
  ordered_json j;
  j["grid"] = {{"n_points", cfg.grid.n_points},
               {"image_height", cfg.grid.image_height},
               {"image_width", cfg.grid.image_width}};
  j["n_samples"] = cfg.n_samples;
  j["liou"] = {{"radius_e", cfg.liou.radius_e}, {"union_rows", cfg.liou.union_rows}};
  j["focal"] = {{"alpha", cfg.focal.alpha}, {"gamma", cfg.focal.gamma}};
  j["loss"] = {{"w_cls", cfg.loss.w_cls},
               {"w_xytl", cfg.loss.w_xytl},
               {"w_liou", cfg.loss.w_liou}};
  j["assign"] = {{"w_sim", cfg.assign.w_sim},
                 {"w_cls", cfg.assign.w_cls},
                 {"k_max", cfg.assign.k_max},
                 {"one_to_one", cfg.assign.one_to_one}};
  j["nms"] = {{"score_thresh", cfg.score_thresh},
              {"iou_thresh", cfg.nms_iou_thresh}};
  j["eval"] = {{"iou_mode", cfg.eval.iou_mode == IouMode::kMask ? "mask" : "line"},
               {"line_width", cfg.eval.line_width},
               {"thresholds", cfg.eval.thresholds},
               {"tusimple_pixel_tol", cfg.eval.tusimple_pixel_tol},
               {"tusimple_point_frac", cfg.eval.tusimple_point_frac},
               {"strict_greater", cfg.eval.strict_greater}};
  return j.dump(2) + "\n";
}

}  // namespace lanekit
