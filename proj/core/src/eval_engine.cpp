#include "lanekit/eval_engine.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lanekit/error.hpp"
#include "lanekit/io_formats.hpp"
#include "lanekit/liou.hpp"
#include "lanekit/parallel.hpp"

namespace lanekit {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path lines_file(const std::string& root, const std::string& rel) {
  std::string r = rel;
  while (!r.empty() && r.front() == '/') r.erase(r.begin());  // list paths may be absolute-style
  fs::path p = fs::path(root) / r;
  p.replace_extension(".lines.txt");
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIo, "cannot open file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Lane> lanes_from_text(const std::string& text, const LaneGrid& grid,
                                  const std::string& origin) {
  std::vector<Lane> lanes;
  std::vector<std::vector<Point2d>> polylines;
  try {
    polylines = parse_culane_lines(text);
  } catch (const Error& e) {
    raise(e.kind(), origin + ": " + e.what());
  }
  for (const auto& poly : polylines) {
    Lane lane = culane_to_lane(poly, grid);
    if (lane.valid_count() >= 2) lanes.push_back(std::move(lane));
  }
  return lanes;
}

void polyline_svg(std::string& out, const std::vector<Point2d>& pts,
                  const char* color, int width) {
  out += "  <polyline fill=\"none\" stroke=\"";
  out += color;
  out += "\" stroke-width=\"" + std::to_string(width) + "\" points=\"";
  char buf[48];
  for (const Point2d& p : pts) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f ", p.x, p.y);
    out += buf;
  }
  out += "\"/>\n";
}

}  // namespace

std::string render_svg(const std::vector<Lane>& preds,
                       const std::vector<Lane>& gts, const LaneGrid& grid) {
  std::string svg;
  char head[160];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                static_cast<int>(grid.image_width),
                static_cast<int>(grid.image_height),
                static_cast<int>(grid.image_width),
                static_cast<int>(grid.image_height));
  svg += head;
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"#202020\"/>\n";
  for (const Lane& gt : gts) polyline_svg(svg, lane_points(gt), "#3fbf3f", 6);
  for (const Lane& pred : preds) polyline_svg(svg, lane_points(pred), "#e04040", 3);
  svg += "</svg>\n";
  return svg;
}

CulaneEvalResult eval_culane(const EvalJob& job) {
  validate_grid(job.grid);
  validate_eval_config(job.eval);
  const auto start = Clock::now();

  const std::vector<std::string> list = load_list(job.list_path);
  CategorySplit split;
  if (!job.category_lists.empty())
    split = split_categories(list, job.category_lists);

  std::vector<ImageEval> images(list.size());
  std::atomic<int> missing_preds{0};
  parallel_for(list.size(), job.jobs, [&](std::size_t i) {
    const std::string& rel = list[i];
    const fs::path gt_file = lines_file(job.gt_path, rel);
    const std::vector<Lane> gts =
        lanes_from_text(read_file(gt_file), job.grid, gt_file.string());

    std::vector<Lane> preds;
    const fs::path pred_file = lines_file(job.pred_path, rel);
    if (fs::exists(pred_file)) {
      preds = lanes_from_text(read_file(pred_file), job.grid, pred_file.string());
    } else {
      missing_preds.fetch_add(1);
    }

    ImageEval& out = images[i];
    if (!job.category_lists.empty()) {
      const auto it = split.category_of.find(rel);
      out.category = it == split.category_of.end() ? std::string{} : it->second;
    }
    out.counts = evaluate_image(preds, gts, job.eval);

    if (!job.render_dir.empty()) {
      fs::path svg_path = fs::path(job.render_dir) / fs::path(rel).relative_path();
      svg_path.replace_extension(".svg");
      fs::create_directories(svg_path.parent_path());
      std::ofstream svg(svg_path);
      if (!svg) raise(ErrorKind::kIo, "cannot write: " + svg_path.string());
      svg << render_svg(preds, gts, job.grid);
    }
  });

  CulaneEvalResult result;
  result.overall = aggregate_report(images);
  if (!job.category_lists.empty()) result.categories = category_report(images);
  result.images = static_cast<int>(list.size());
  result.missing_pred_files = missing_preds.load();
  result.seconds = seconds_since(start);
  return result;
}

TusimpleEvalResult eval_tusimple(const EvalJob& job) {
  validate_eval_config(job.eval);
  const auto start = Clock::now();

  const std::vector<TusimpleRecord> gts = load_tusimple_file(job.gt_path);
  const std::vector<TusimpleRecord> preds = load_tusimple_file(job.pred_path);

  std::map<std::string, const TusimpleRecord*> by_file;
  for (const TusimpleRecord& r : gts) by_file[r.raw_file] = nullptr;
  std::map<std::string, const TusimpleRecord*> pred_of;
  for (const TusimpleRecord& r : preds) {
    if (!by_file.count(r.raw_file))
      raise(ErrorKind::kFormat, "prediction for unknown raw_file: " + r.raw_file);
    if (pred_of.count(r.raw_file))
      raise(ErrorKind::kFormat, "duplicate prediction for raw_file: " + r.raw_file);
    pred_of[r.raw_file] = &r;
  }

  TusimpleEvalResult result;
  std::vector<TusimpleFrame> frames;
  frames.reserve(gts.size());
  for (const TusimpleRecord& gt : gts) {
    TusimpleFrame frame;
    frame.h_samples = gt.h_samples;
    frame.gts = gt.lanes;
    const auto it = pred_of.find(gt.raw_file);
    if (it == pred_of.end()) {
      result.missing_pred_frames += 1;
    } else {
      if (it->second->h_samples != gt.h_samples)
        raise(ErrorKind::kFormat,
              "h_samples mismatch for raw_file: " + gt.raw_file);
      frame.preds = it->second->lanes;
    }
    frames.push_back(std::move(frame));
  }
  result.result = tusimple_eval(frames, job.eval);
  result.frames = static_cast<int>(frames.size());
  result.seconds = seconds_since(start);
  return result;
}

DatasetEvalResult eval_dataset(const SynthDataset& dataset,
                               const EvalConfig& cfg, int jobs) {
  validate_eval_config(cfg);
  const auto start = Clock::now();
  std::vector<ImageEval> images(dataset.images.size());
  parallel_for(dataset.images.size(), jobs, [&](std::size_t i) {
    images[i].counts =
        evaluate_image(dataset.images[i].preds, dataset.images[i].gts, cfg);
  });
  DatasetEvalResult out;
  out.report = aggregate_report(images);
  out.images = static_cast<int>(dataset.images.size());
  out.seconds = seconds_since(start);
  return out;
}

BenchResult bench_eval(int n_images, int jobs, std::uint64_t seed,
                       const LaneGrid& grid, const EvalConfig& cfg) {
  if (n_images < 1) raise(ErrorKind::kDomain, "bench: n_images must be >= 1");
  SynthOptions opt;
  opt.seed = seed;
  opt.images = n_images;
  opt.grid = grid;
  const SynthDataset dataset = synth_dataset(opt);  // untimed setup
  const DatasetEvalResult r = eval_dataset(dataset, cfg, jobs);
  BenchResult bench;
  bench.images = r.images;
  bench.seconds = r.seconds;
  bench.images_per_second = r.seconds > 0.0 ? r.images / r.seconds : 0.0;
  bench.mf1 = r.report.mf1;
  return bench;
}

LiouBenchResult bench_liou(long long n_evals, int n_rows, std::uint64_t seed) {
  if (n_evals < 1 || n_rows < 1)
    raise(ErrorKind::kDomain, "bench: counts must be >= 1");
  SynthRng rng(seed);
  std::vector<double> pred(static_cast<std::size_t>(n_rows));
  std::vector<double> gt(static_cast<std::size_t>(n_rows));
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(n_rows), 1);
  for (int i = 0; i < n_rows; ++i) {
    pred[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1640.0);
    gt[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1640.0);
  }

  LiouBenchResult r;
  r.evals = n_evals;
  const auto start = Clock::now();
  for (long long k = 0; k < n_evals; ++k) {
    pred[static_cast<std::size_t>(k % n_rows)] = rng.uniform(0.0, 1640.0);
    const LiouResult liou = line_iou(pred, gt, rows, 15.0);
    r.checksum += liou.value + liou.grad_pred[0];
  }
  r.seconds = seconds_since(start);
  r.evals_per_second = r.seconds > 0.0 ? n_evals / r.seconds : 0.0;
  return r;
}

}  // namespace lanekit
