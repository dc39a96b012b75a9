#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lanekit/metrics.hpp"
#include "lanekit/synth.hpp"

namespace lanekit {

enum class DatasetFormat { kCulane, kTusimple };

struct EvalJob {
  DatasetFormat format = DatasetFormat::kCulane;
  /// Roots of the ".lines.txt" trees for the culane format; JSON-lines file
  /// paths for the tusimple format.
  std::string pred_path;
  std::string gt_path;
  std::string list_path;  // culane only: image list, one relative path per line
  /// Optional (name, list file) pairs splitting the main list per category.
  std::vector<std::pair<std::string, std::string>> category_lists;
  LaneGrid grid{};
  EvalConfig eval{};
  int jobs = 1;
  std::string render_dir;  // when nonempty, write one SVG per image (culane)
};

struct CulaneEvalResult {
  EvalReport overall;
  std::vector<CategoryReport> categories;  // empty without category lists
  int images = 0;
  /// Images whose prediction file was absent; they count as all-miss.
  int missing_pred_files = 0;
  double seconds = 0.0;
};

/// Walk the list, match predictions to ground truth file-by-file, aggregate
/// F1 over the configured thresholds. A missing ground-truth file is an I/O
/// error; a missing prediction file contributes only false negatives.
CulaneEvalResult eval_culane(const EvalJob& job);

struct TusimpleEvalResult {
  TusimpleResult result;
  int frames = 0;
  /// Ground-truth frames with no prediction record; all their lanes miss.
  int missing_pred_frames = 0;
  double seconds = 0.0;
};

/// Match records by raw_file. Prediction records for unknown raw_file values
/// are format errors (they signal a dataset mix-up).
TusimpleEvalResult eval_tusimple(const EvalJob& job);

struct DatasetEvalResult {
  EvalReport report;
  int images = 0;
  double seconds = 0.0;
};

/// Evaluate an in-memory dataset of prediction/ground-truth lanes.
DatasetEvalResult eval_dataset(const SynthDataset& dataset,
                               const EvalConfig& cfg, int jobs);

struct BenchResult {
  int images = 0;
  double seconds = 0.0;
  double images_per_second = 0.0;
  double mf1 = 0.0;
};

/// Throughput of full per-image F1 evaluation over seeded synthetic scenes
/// (scene generation is excluded from the timing).
BenchResult bench_eval(int n_images, int jobs, std::uint64_t seed,
                       const LaneGrid& grid, const EvalConfig& cfg);

struct LiouBenchResult {
  long long evals = 0;
  double seconds = 0.0;
  double evals_per_second = 0.0;
  double checksum = 0.0;  // consumes results so the loop cannot be elided
};

/// Wall time of repeated IoU + gradient evaluations on random n_rows lanes.
LiouBenchResult bench_liou(long long n_evals, int n_rows, std::uint64_t seed);

/// Minimal SVG rendering of one scene (ground truth in green, predictions in
/// red) for eye-balling evaluation inputs.
std::string render_svg(const std::vector<Lane>& preds,
                       const std::vector<Lane>& gts, const LaneGrid& grid);

}  // namespace lanekit
