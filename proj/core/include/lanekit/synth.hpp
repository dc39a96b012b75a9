#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lanekit/head_math.hpp"
#include "lanekit/lane_geometry.hpp"

namespace lanekit {

/// Deterministic uniform doubles in [0, 1) from a 64-bit generator state
/// (splitmix-style), so generated scenes are identical on every platform.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                            // [0, 1)
  double uniform(double lo, double hi);        // [lo, hi)
  double normal(double mean, double stddev);   // Box-Muller
  int uniform_int(int lo, int hi);             // inclusive

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct SynthOptions {
  std::uint64_t seed = 0;
  int images = 8;
  int lanes = 4;    // ground-truth lanes per image
  int priors = 16;  // lane priors per image
  LaneGrid grid{};
  double drop_prob = 0.2;    // chance a gt lane has no prediction
  double extra_prob = 0.3;   // chance of one spurious prediction
  double jitter = 2.5;       // per-row prediction noise, pixels
  bool with_features = false;
  int feature_channels = 8;  // per level, when with_features
  int feature_height = 10;
  int feature_width = 25;
  int feature_levels = 3;
};

struct SynthImage {
  std::vector<Lane> gts;
  std::vector<Lane> preds;
  std::vector<double> pred_scores;
  std::vector<LanePrior> priors;
  std::vector<FeatureMap> features;  // empty unless with_features
};

struct SynthDataset {
  LaneGrid grid{};
  std::vector<SynthImage> images;
};

/// Single curved lane with its bottom at a random position; valid rows form
/// one contiguous run. Never empty.
Lane synth_lane(const LaneGrid& grid, SynthRng& rng);

SynthImage synth_image(const SynthOptions& opt, SynthRng& rng);

/// Scenes depend only on the options (seeded); two identical calls produce
/// identical datasets.
SynthDataset synth_dataset(const SynthOptions& opt);

std::string dataset_to_json(const SynthDataset& dataset);
SynthDataset dataset_from_json(std::string_view text);
SynthDataset load_dataset(const std::string& path);

}  // namespace lanekit
