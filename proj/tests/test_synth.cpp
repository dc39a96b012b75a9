#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "lanekit/synth.hpp"
#include "test_util.hpp"

using namespace lanekit;
using testutil::make_grid;

TEST_SUITE("synth") {

TEST_CASE("the generator emits the reference splitmix sequence") {
  SynthRng rng(0);
  CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next_u64() == 0x06C45D188009454FULL);
}

TEST_CASE("generator ranges") {
  SynthRng rng(123);
  bool hit_lo = false, hit_hi = false;
  for (int i = 0; i < 5000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-3.0, 7.0);
    CHECK(v >= -3.0);
    CHECK(v < 7.0);
    const int k = rng.uniform_int(2, 4);
    CHECK(k >= 2);
    CHECK(k <= 4);
    hit_lo = hit_lo || k == 2;
    hit_hi = hit_hi || k == 4;
  }
  CHECK(hit_lo);
  CHECK(hit_hi);

  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) mean += rng.normal(0.0, 1.0);
  mean /= 10000.0;
  CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("synthetic lanes are nonempty contiguous runs inside the image") {
  const LaneGrid grid = make_grid(24, 240.0, 640.0);
  SynthRng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const Lane lane = synth_lane(grid, rng);
    CHECK(lane.valid_count() >= 1);
    CHECK_NOTHROW(validate_lane(lane));
    for (int row = 0; row < grid.n_points; ++row) {
      if (!lane.row_valid(row)) continue;
      CHECK(lane.xs[static_cast<std::size_t>(row)] >= 0.0);
      CHECK(lane.xs[static_cast<std::size_t>(row)] < grid.image_width);
    }
    // The bottom of the run sits in the lower quarter of the image.
    CHECK(lane.last_valid() >= grid.n_points - 1 - grid.n_points / 4);
  }
}

TEST_CASE("scenes keep predictions, scores and priors consistent") {
  SynthOptions opt;
  opt.seed = 99;
  opt.images = 6;
  opt.grid = make_grid(24, 240.0, 640.0);
  const SynthDataset ds = synth_dataset(opt);
  CHECK(ds.images.size() == 6);
  for (const SynthImage& img : ds.images) {
    CHECK(img.gts.size() == static_cast<std::size_t>(opt.lanes));
    CHECK(img.preds.size() == img.pred_scores.size());
    for (double s : img.pred_scores) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    CHECK(img.priors.size() == static_cast<std::size_t>(opt.priors));
    for (const LanePrior& p : img.priors)
      CHECK_NOTHROW(validate_prior(p, opt.grid));
    CHECK(img.features.empty());
  }

  SUBCASE("feature pyramids appear on request with the configured shape") {
    SynthOptions with = opt;
    with.with_features = true;
    with.images = 2;
    const SynthDataset fd = synth_dataset(with);
    for (const SynthImage& img : fd.images) {
      REQUIRE(img.features.size() == static_cast<std::size_t>(with.feature_levels));
      for (const FeatureMap& f : img.features) {
        CHECK(f.channels == with.feature_channels);
        CHECK(f.height == with.feature_height);
        CHECK(f.width == with.feature_width);
        CHECK_NOTHROW(validate_feature_map(f));
      }
    }
  }

  SUBCASE("option validation") {
    SynthOptions bad = opt;
    bad.images = 0;
    CHECK_THROWS_AS(synth_dataset(bad), Error);
    bad = opt;
    bad.lanes = 0;
    CHECK_THROWS_AS(synth_dataset(bad), Error);
  }
}

TEST_CASE("identical options give byte-identical datasets") {
  SynthOptions opt;
  opt.seed = 7;
  opt.images = 4;
  opt.grid = make_grid(24, 240.0, 640.0);
  opt.with_features = true;
  opt.feature_levels = 2;
  const std::string a = dataset_to_json(synth_dataset(opt));
  const std::string b = dataset_to_json(synth_dataset(opt));
  CHECK(a == b);

  opt.seed = 8;
  const std::string c = dataset_to_json(synth_dataset(opt));
  CHECK(a != c);
}

TEST_CASE("dataset json round trip is lossless") {
  SynthOptions opt;
  opt.seed = 4242;
  opt.images = 3;
  opt.grid = make_grid(24, 240.0, 640.0);
  opt.with_features = true;
  opt.feature_levels = 1;
  const SynthDataset ds = synth_dataset(opt);
  const std::string text = dataset_to_json(ds);
  const SynthDataset back = dataset_from_json(text);
  CHECK(dataset_to_json(back) == text);
  CHECK(back.grid.n_points == opt.grid.n_points);
  REQUIRE(back.images.size() == ds.images.size());
  const SynthImage& orig = ds.images[0];
  const SynthImage& copy = back.images[0];
  REQUIRE(copy.gts.size() == orig.gts.size());
  for (std::size_t i = 0; i < orig.gts.size(); ++i) {
    for (std::size_t r = 0; r < orig.gts[i].xs.size(); ++r) {
      CHECK(copy.gts[i].valid[r] == orig.gts[i].valid[r]);
      if (orig.gts[i].valid[r])
        CHECK(testutil::bits_equal(copy.gts[i].xs[r], orig.gts[i].xs[r]));
    }
  }
}

TEST_CASE("dataset json error reporting") {
  try {
    dataset_from_json("{broken");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
  }
  try {
    dataset_from_json(R"({"grid": {"n_points": 5}})");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFormat);  // grid incomplete
  }

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("lanekit_synth_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  try {
    load_dataset((dir / "none.json").string());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }

  SynthOptions opt;
  opt.seed = 1;
  opt.images = 1;
  opt.grid = make_grid(10, 100.0, 200.0);
  const std::string text = dataset_to_json(synth_dataset(opt));
  const fs::path file = dir / "ds.json";
  {
    std::ofstream out(file);
    out << text;
  }
  const SynthDataset ds = load_dataset(file.string());
  CHECK(dataset_to_json(ds) == text);
  std::error_code ec;
  fs::remove_all(dir, ec);
}

}  // TEST_SUITE
