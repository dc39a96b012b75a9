#include "lanekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {

namespace {
constexpr double kPi = 3.14159265358979323846;
using nlohmann::ordered_json;
}  // namespace

std::uint64_t SynthRng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SynthRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SynthRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SynthRng::normal(double mean, double stddev) {
  if (have_spare_) {
    have_spare_ = false;
    return mean + stddev * spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * kPi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return mean + stddev * r * std::cos(a);
}

int SynthRng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(uniform() * (hi - lo + 1));
}

Lane synth_lane(const LaneGrid& grid, SynthRng& rng) {
  validate_grid(grid);
  const int n = grid.n_points;
  Lane lane = empty_lane(grid);
  const int bottom = n - 1 - rng.uniform_int(0, std::max(1, n / 6));
  const int min_len = std::max(2, static_cast<int>(0.4 * n));
  const int len = rng.uniform_int(std::min(min_len, bottom + 1), bottom + 1);
  const int top = bottom - len + 1;

  const double x_bottom = rng.uniform(0.15, 0.85) * grid.image_width;
  const double slope = rng.uniform(-0.6, 0.6);      // px of x per px of y
  const double curve = rng.uniform(-3e-4, 3e-4);    // quadratic term
  const double y_bottom = grid.y_at(bottom);
  for (int row = bottom; row >= top; --row) {
    const double dy = y_bottom - grid.y_at(row);
    const double x = x_bottom + slope * dy + curve * dy * dy;
    if (!(x >= 0.0 && x < grid.image_width)) break;
    lane.xs[static_cast<std::size_t>(row)] = x;
    lane.valid[static_cast<std::size_t>(row)] = 1;
  }
  return lane;
}

namespace {

Lane jittered_pred(const Lane& gt, double jitter, SynthRng& rng) {
  Lane pred = empty_lane(gt.grid);
  const int top = gt.first_valid();
  const int bottom = gt.last_valid();
  int cut_top = top;
  if (rng.uniform() < 0.3)
    cut_top = top + rng.uniform_int(0, std::max(0, (bottom - top) / 4));
  for (int row = bottom; row >= cut_top; --row) {
    const double x =
        gt.xs[static_cast<std::size_t>(row)] + rng.normal(0.0, jitter);
    if (!(x >= 0.0 && x < gt.grid.image_width)) break;
    pred.xs[static_cast<std::size_t>(row)] = x;
    pred.valid[static_cast<std::size_t>(row)] = 1;
  }
  return pred;
}

LanePrior prior_near(const Lane& gt, const LaneGrid& grid, SynthRng& rng) {
  const StartPose pose = derive_pose(gt);
  LanePrior p;
  p.score = rng.uniform(0.3, 0.99);
  p.start_x = std::clamp(pose.start_x + rng.normal(0.0, 0.02), 0.0, 0.999);
  p.start_y = std::clamp(pose.start_y + rng.normal(0.0, 0.02), 0.5, 1.0);
  p.theta = std::clamp(pose.theta + rng.normal(0.0, 0.05), 0.05 * kPi, 0.95 * kPi);
  p.length = std::clamp(gt.valid_count() + rng.normal(0.0, 3.0), 2.0,
                        static_cast<double>(grid.n_points));
  p.offsets.assign(static_cast<std::size_t>(grid.n_points), 0.0);
  return p;
}

LanePrior prior_random(const LaneGrid& grid, SynthRng& rng) {
  LanePrior p;
  p.score = rng.uniform(0.0, 0.7);
  p.start_x = rng.uniform(0.05, 0.95);
  p.start_y = rng.uniform(0.85, 1.0);
  p.theta = rng.uniform(0.3 * kPi, 0.7 * kPi);
  p.length = rng.uniform(0.3, 1.0) * grid.n_points;
  p.offsets.assign(static_cast<std::size_t>(grid.n_points), 0.0);
  return p;
}

FeatureMap synth_feature_map(int c, int h, int w, SynthRng& rng) {
  FeatureMap f = make_feature_map(c, h, w);
  for (double& v : f.data) v = rng.uniform(-1.0, 1.0);
  return f;
}

}  // namespace

SynthImage synth_image(const SynthOptions& opt, SynthRng& rng) {
  SynthImage img;
  for (int i = 0; i < opt.lanes; ++i) img.gts.push_back(synth_lane(opt.grid, rng));
  for (const Lane& gt : img.gts) {
    if (rng.uniform() < opt.drop_prob) continue;
    Lane pred = jittered_pred(gt, opt.jitter, rng);
    if (pred.valid_count() < 2) continue;
    img.preds.push_back(std::move(pred));
    img.pred_scores.push_back(rng.uniform(0.55, 0.99));
  }
  if (rng.uniform() < opt.extra_prob) {
    img.preds.push_back(synth_lane(opt.grid, rng));
    img.pred_scores.push_back(rng.uniform(0.05, 0.6));
  }
  for (int i = 0; i < opt.priors; ++i) {
    if (!img.gts.empty() && i % 2 == 0) {
      img.priors.push_back(
          prior_near(img.gts[static_cast<std::size_t>(i / 2) % img.gts.size()],
                     opt.grid, rng));
    } else {
      img.priors.push_back(prior_random(opt.grid, rng));
    }
  }
  if (opt.with_features) {
    for (int l = 0; l < opt.feature_levels; ++l)
      img.features.push_back(synth_feature_map(
          opt.feature_channels, opt.feature_height, opt.feature_width, rng));
  }
  return img;
}

SynthDataset synth_dataset(const SynthOptions& opt) {
  if (opt.images < 1) raise(ErrorKind::kDomain, "synth: images must be >= 1");
  if (opt.lanes < 1) raise(ErrorKind::kDomain, "synth: lanes must be >= 1");
  validate_grid(opt.grid);
  SynthDataset ds;
  ds.grid = opt.grid;
  SynthRng rng(opt.seed);
  for (int i = 0; i < opt.images; ++i) ds.images.push_back(synth_image(opt, rng));
  return ds;
}

namespace {

ordered_json lane_to_json(const Lane& lane) {
  ordered_json j;
  ordered_json xs = ordered_json::array();
  ordered_json valid = ordered_json::array();
  for (std::size_t i = 0; i < lane.xs.size(); ++i) {
    xs.push_back(lane.row_valid(i) ? lane.xs[i] : -1.0);
    valid.push_back(lane.row_valid(i) ? 1 : 0);
  }
  j["xs"] = std::move(xs);
  j["valid"] = std::move(valid);
  return j;
}

Lane lane_from_json(const ordered_json& j, const LaneGrid& grid) {
  if (!j.is_object() || !j.contains("xs") || !j.contains("valid"))
    raise(ErrorKind::kFormat, "lane needs 'xs' and 'valid' arrays");
  std::vector<double> xs;
  std::vector<std::uint8_t> valid;
  for (const auto& v : j["xs"]) xs.push_back(v.get<double>());
  for (const auto& v : j["valid"])
    valid.push_back(v.get<int>() ? std::uint8_t{1} : std::uint8_t{0});
  if (static_cast<int>(xs.size()) != grid.n_points ||
      valid.size() != xs.size())
    raise(ErrorKind::kFormat, "lane arrays must match the grid row count");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!valid[i]) xs[i] = kInvalidX;
  return make_lane(grid, std::move(xs), std::move(valid));
}

ordered_json prior_to_json(const LanePrior& p) {
  ordered_json j;
  j["score"] = p.score;
  j["start_x"] = p.start_x;
  j["start_y"] = p.start_y;
  j["theta"] = p.theta;
  j["length"] = p.length;
  j["offsets"] = p.offsets;
  return j;
}

LanePrior prior_from_json(const ordered_json& j) {
  LanePrior p;
  if (!j.is_object()) raise(ErrorKind::kFormat, "prior must be an object");
  for (const char* key : {"score", "start_x", "start_y", "theta", "length", "offsets"})
    if (!j.contains(key))
      raise(ErrorKind::kFormat, std::string("prior missing key: ") + key);
  p.score = j["score"].get<double>();
  p.start_x = j["start_x"].get<double>();
  p.start_y = j["start_y"].get<double>();
  p.theta = j["theta"].get<double>();
  p.length = j["length"].get<double>();
  for (const auto& v : j["offsets"]) p.offsets.push_back(v.get<double>());
  return p;
}

ordered_json fmap_to_json(const FeatureMap& f) {
  ordered_json j;
  j["channels"] = f.channels;
  j["height"] = f.height;
  j["width"] = f.width;
  j["data"] = f.data;
  return j;
}

FeatureMap fmap_from_json(const ordered_json& j) {
  FeatureMap f;
  f.channels = j.at("channels").get<int>();
  f.height = j.at("height").get<int>();
  f.width = j.at("width").get<int>();
  for (const auto& v : j.at("data")) f.data.push_back(v.get<double>());
  validate_feature_map(f);
  return f;
}

}  // namespace

std::string dataset_to_json(const SynthDataset& dataset) {
  ordered_json j;
  j["grid"] = {{"n_points", dataset.grid.n_points},
               {"image_height", dataset.grid.image_height},
               {"image_width", dataset.grid.image_width}};
  ordered_json images = ordered_json::array();
  for (const SynthImage& img : dataset.images) {
    ordered_json ji;
    ordered_json gts = ordered_json::array();
    for (const Lane& l : img.gts) gts.push_back(lane_to_json(l));
    ji["gts"] = std::move(gts);
    ordered_json preds = ordered_json::array();
    for (const Lane& l : img.preds) preds.push_back(lane_to_json(l));
    ji["preds"] = std::move(preds);
    ji["pred_scores"] = img.pred_scores;
    ordered_json priors = ordered_json::array();
    for (const LanePrior& p : img.priors) priors.push_back(prior_to_json(p));
    ji["priors"] = std::move(priors);
    if (!img.features.empty()) {
      ordered_json feats = ordered_json::array();
      for (const FeatureMap& f : img.features) feats.push_back(fmap_to_json(f));
      ji["features"] = std::move(feats);
    }
    images.push_back(std::move(ji));
  }
  j["images"] = std::move(images);
  return j.dump(2) + "\n";
}

SynthDataset dataset_from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    raise(ErrorKind::kParse, std::string("invalid JSON: ") + e.what());
  }
  SynthDataset ds;
  try {
    ds.grid.n_points = j.at("grid").at("n_points").get<int>();
    ds.grid.image_height = j.at("grid").at("image_height").get<double>();
    ds.grid.image_width = j.at("grid").at("image_width").get<double>();
    validate_grid(ds.grid);
    for (const auto& ji : j.at("images")) {
      SynthImage img;
      for (const auto& l : ji.at("gts")) img.gts.push_back(lane_from_json(l, ds.grid));
      for (const auto& l : ji.at("preds"))
        img.preds.push_back(lane_from_json(l, ds.grid));
      for (const auto& s : ji.at("pred_scores"))
        img.pred_scores.push_back(s.get<double>());
      for (const auto& p : ji.at("priors")) img.priors.push_back(prior_from_json(p));
      if (ji.contains("features"))
        for (const auto& f : ji["features"]) img.features.push_back(fmap_from_json(f));
      if (img.preds.size() != img.pred_scores.size())
        raise(ErrorKind::kFormat, "preds and pred_scores lengths differ");
      ds.images.push_back(std::move(img));
    }
  } catch (const ordered_json::exception& e) {
    raise(ErrorKind::kFormat, std::string("bad dataset JSON: ") + e.what());
  }
  return ds;
}

SynthDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIo, "cannot open dataset: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return dataset_from_json(buf.str());
}

}  // namespace lanekit
