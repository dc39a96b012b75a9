#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lanekit/assignment.hpp"
#include "lanekit/config.hpp"
#include "lanekit/error.hpp"
#include "lanekit/eval_engine.hpp"
#include "lanekit/head_math.hpp"
#include "lanekit/io_formats.hpp"
#include "lanekit/liou.hpp"
#include "lanekit/synth.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct GlobalArgs {
  std::string config_path;
  bool json = false;
  int jobs = 1;
  std::uint64_t seed = 0;
};

void emit_error(const GlobalArgs& g, const std::string& kind,
                const std::string& message) {
  if (g.json) {
    ordered_json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "error: " << message << "\n";
  }
}

lanekit::Config make_config(const GlobalArgs& g) {
  lanekit::Config cfg = lanekit::default_config();
  if (!g.config_path.empty()) cfg = lanekit::load_config_file(g.config_path);
  return cfg;
}

/// One lane as whitespace-separated x values, "-" marking rows with no lane.
void read_xs_file(const std::string& path, std::vector<double>& xs,
                  std::vector<std::uint8_t>& valid) {
  std::ifstream in(path);
  if (!in) lanekit::raise(lanekit::ErrorKind::kIo, "cannot open file: " + path);
  std::string token;
  while (in >> token) {
    if (token == "-") {
      xs.push_back(0.0);
      valid.push_back(0);
      continue;
    }
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size())
      lanekit::raise(lanekit::ErrorKind::kParse,
                     path + ": not a number: '" + token + "'");
    xs.push_back(v);
    valid.push_back(1);
  }
}

// ---- liou ----------------------------------------------------------------

struct LiouArgs {
  std::string pred_file;
  std::string gt_file;
  double radius = -1.0;  // < 0: take the config value
};

int cmd_liou(const GlobalArgs& g, const LiouArgs& a) {
  const lanekit::Config cfg = make_config(g);
  const double radius = a.radius > 0.0 ? a.radius : cfg.liou.radius_e;

  std::vector<double> pred, gt;
  std::vector<std::uint8_t> pred_valid, gt_valid;
  read_xs_file(a.pred_file, pred, pred_valid);
  read_xs_file(a.gt_file, gt, gt_valid);
  if (pred.size() != gt.size())
    lanekit::raise(lanekit::ErrorKind::kFormat,
                   "pred and gt row counts differ (" +
                       std::to_string(pred.size()) + " vs " +
                       std::to_string(gt.size()) + ")");
  std::vector<std::uint8_t> rows(pred.size());
  std::size_t used = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = pred_valid[i] && gt_valid[i];
    used += rows[i];
  }
  const lanekit::LiouResult r = lanekit::line_iou(pred, gt, rows, radius);

  if (g.json) {
    ordered_json j;
    j["value"] = r.value;
    j["loss"] = r.loss();
    j["radius"] = radius;
    j["rows_used"] = used;
    j["grad_pred"] = r.grad_pred;
    std::cout << j.dump() << "\n";
  } else {
    std::printf("value %.10g\n", r.value);
    std::printf("loss  %.10g\n", r.loss());
    std::printf("rows  %zu of %zu\n", used, rows.size());
    std::printf("grad ");
    for (double gr : r.grad_pred) std::printf(" %.10g", gr);
    std::printf("\n");
  }
  return 0;
}

// ---- nms -----------------------------------------------------------------

struct NmsArgs {
  std::string pred_file;
  double score_thresh = -1.0;
  double iou_thresh = -2.0;
};

int cmd_nms(const GlobalArgs& g, const NmsArgs& a) {
  const lanekit::Config cfg = make_config(g);
  const double score_thresh =
      a.score_thresh >= 0.0 ? a.score_thresh : cfg.score_thresh;
  const double iou_thresh = a.iou_thresh >= -1.0 ? a.iou_thresh : cfg.nms_iou_thresh;

  const lanekit::SynthDataset ds = lanekit::load_dataset(a.pred_file);
  ordered_json out_images = ordered_json::array();
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const lanekit::SynthImage& img = ds.images[i];
    std::vector<int> candidates;
    std::vector<lanekit::Lane> lanes;
    std::vector<double> scores;
    for (std::size_t p = 0; p < img.preds.size(); ++p) {
      if (img.pred_scores[p] < score_thresh) continue;
      candidates.push_back(static_cast<int>(p));
      lanes.push_back(img.preds[p]);
      scores.push_back(img.pred_scores[p]);
    }
    const std::vector<int> kept =
        lanekit::nms_lanes(lanes, scores, iou_thresh, cfg.liou.radius_e);
    std::vector<int> kept_orig;
    for (int k : kept) kept_orig.push_back(candidates[static_cast<std::size_t>(k)]);

    if (g.json) {
      ordered_json ji;
      ji["kept"] = kept_orig;
      ji["dropped"] = static_cast<int>(img.preds.size() - kept_orig.size());
      out_images.push_back(std::move(ji));
    } else {
      std::printf("image %zu: kept", i);
      for (int k : kept_orig) std::printf(" %d", k);
      std::printf("  (dropped %zu of %zu)\n", img.preds.size() - kept_orig.size(),
                  img.preds.size());
    }
  }
  if (g.json) {
    ordered_json j;
    j["score_thresh"] = score_thresh;
    j["iou_thresh"] = iou_thresh;
    j["images"] = std::move(out_images);
    std::cout << j.dump() << "\n";
  }
  return 0;
}

// ---- assign --------------------------------------------------------------

struct AssignArgs {
  std::string priors_file;
  std::string gt_file;
};

int cmd_assign(const GlobalArgs& g, const AssignArgs& a) {
  const lanekit::Config cfg = make_config(g);
  const lanekit::SynthDataset prior_ds = lanekit::load_dataset(a.priors_file);
  const lanekit::SynthDataset gt_ds =
      a.gt_file == a.priors_file ? prior_ds : lanekit::load_dataset(a.gt_file);
  if (prior_ds.images.size() != gt_ds.images.size())
    lanekit::raise(lanekit::ErrorKind::kFormat,
                   "priors and gt datasets have different image counts");

  ordered_json out_images = ordered_json::array();
  for (std::size_t i = 0; i < prior_ds.images.size(); ++i) {
    const lanekit::AssignmentResult r =
        lanekit::assign(prior_ds.images[i].priors, gt_ds.images[i].gts,
                        prior_ds.grid, cfg.assign);
    if (g.json) {
      ordered_json ji;
      ordered_json per_gt = ordered_json::array();
      for (const auto& matches : r.per_gt) {
        ordered_json jm = ordered_json::array();
        for (const lanekit::PriorMatch& m : matches)
          jm.push_back({{"prior", m.prior}, {"cost", m.cost}});
        per_gt.push_back(std::move(jm));
      }
      ji["per_gt"] = std::move(per_gt);
      ji["prior_to_gt"] = r.prior_to_gt;
      out_images.push_back(std::move(ji));
    } else {
      std::printf("image %zu\n", i);
      for (std::size_t gt = 0; gt < r.per_gt.size(); ++gt) {
        std::printf("  gt %zu:", gt);
        for (const lanekit::PriorMatch& m : r.per_gt[gt])
          std::printf(" prior %d (cost %.6g)", m.prior, m.cost);
        std::printf("\n");
      }
      int background = 0;
      for (int v : r.prior_to_gt) background += v < 0;
      std::printf("  background: %d of %zu priors\n", background,
                  r.prior_to_gt.size());
    }
  }
  if (g.json) {
    ordered_json j;
    j["images"] = std::move(out_images);
    std::cout << j.dump() << "\n";
  }
  return 0;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string out_file;
  int images = 8;
  int lanes = 4;
  int priors = 16;
  bool features = false;
};

int cmd_synth(const GlobalArgs& g, const SynthArgs& a) {
  const lanekit::Config cfg = make_config(g);
  lanekit::SynthOptions opt;
  opt.seed = g.seed;
  opt.images = a.images;
  opt.lanes = a.lanes;
  opt.priors = a.priors;
  opt.grid = cfg.grid;
  opt.with_features = a.features;
  const lanekit::SynthDataset ds = lanekit::synth_dataset(opt);
  const std::string text = lanekit::dataset_to_json(ds);

  if (a.out_file.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(a.out_file);
  if (!out)
    lanekit::raise(lanekit::ErrorKind::kIo, "cannot write: " + a.out_file);
  out << text;
  out.close();
  if (g.json) {
    ordered_json j;
    j["written"] = a.out_file;
    j["images"] = a.images;
    std::cout << j.dump() << "\n";
  } else {
    std::printf("wrote %d images to %s\n", a.images, a.out_file.c_str());
  }
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string pred_path;
  std::string gt_path;
  std::string list_path;
  std::string format = "culane";
  std::string iou_mode;
  double line_width = -1.0;
  std::vector<std::string> categories;  // NAME=FILE
  std::string render_dir;
};

ordered_json report_to_json(const lanekit::EvalReport& report) {
  ordered_json per = ordered_json::array();
  for (const lanekit::ThresholdReport& t : report.per_threshold) {
    per.push_back({{"threshold", t.threshold},
                   {"tp", t.tp},
                   {"fp", t.fp},
                   {"fn", t.fn},
                   {"precision", t.precision},
                   {"recall", t.recall},
                   {"f1", t.f1}});
  }
  return {{"per_threshold", std::move(per)}, {"mf1", report.mf1}};
}

void print_report(const lanekit::EvalReport& report) {
  std::printf("thr     tp      fp      fn      prec     recall   f1\n");
  for (const lanekit::ThresholdReport& t : report.per_threshold)
    std::printf("%.2f  %6lld  %6lld  %6lld  %.5f  %.5f  %.5f\n", t.threshold,
                t.tp, t.fp, t.fn, t.precision, t.recall, t.f1);
  std::printf("mF1 %.5f\n", report.mf1);
}

int cmd_eval(const GlobalArgs& g, const EvalArgs& a) {
  const lanekit::Config cfg = make_config(g);
  lanekit::EvalJob job;
  job.pred_path = a.pred_path;
  job.gt_path = a.gt_path;
  job.list_path = a.list_path;
  job.grid = cfg.grid;
  job.eval = cfg.eval;
  job.jobs = g.jobs;
  job.render_dir = a.render_dir;
  if (!a.iou_mode.empty())
    job.eval.iou_mode =
        a.iou_mode == "line" ? lanekit::IouMode::kLine : lanekit::IouMode::kMask;
  if (a.line_width > 0.0) job.eval.line_width = a.line_width;
  for (const std::string& spec : a.categories) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      lanekit::raise(lanekit::ErrorKind::kConfig,
                     "--category expects NAME=FILE, got: " + spec);
    job.category_lists.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
  }

  if (a.format == "tusimple") {
    job.format = lanekit::DatasetFormat::kTusimple;
    const lanekit::TusimpleEvalResult r = lanekit::eval_tusimple(job);
    if (g.json) {
      ordered_json j;
      j["format"] = "tusimple";
      j["frames"] = r.frames;
      j["missing_pred_frames"] = r.missing_pred_frames;
      j["accuracy"] = r.result.accuracy;
      j["fp"] = r.result.fp_rate;
      j["fn"] = r.result.fn_rate;
      j["seconds"] = r.seconds;
      std::cout << j.dump() << "\n";
    } else {
      std::printf("frames    %d (missing preds %d)\n", r.frames,
                  r.missing_pred_frames);
      std::printf("accuracy  %.5f\n", r.result.accuracy);
      std::printf("fp        %.5f\n", r.result.fp_rate);
      std::printf("fn        %.5f\n", r.result.fn_rate);
    }
    return 0;
  }

  job.format = lanekit::DatasetFormat::kCulane;
  const lanekit::CulaneEvalResult r = lanekit::eval_culane(job);
  if (g.json) {
    ordered_json j;
    j["format"] = "culane";
    j["images"] = r.images;
    j["missing_pred_files"] = r.missing_pred_files;
    j["overall"] = report_to_json(r.overall);
    if (!r.categories.empty()) {
      ordered_json cats = ordered_json::array();
      for (const lanekit::CategoryReport& c : r.categories) {
        ordered_json jc;
        jc["name"] = c.category;
        jc["fp_only"] = c.fp_only;
        if (c.fp_only)
          jc["fp"] = c.report.per_threshold.front().fp;
        else
          jc["report"] = report_to_json(c.report);
        cats.push_back(std::move(jc));
      }
      j["categories"] = std::move(cats);
    }
    j["seconds"] = r.seconds;
    std::cout << j.dump() << "\n";
  } else {
    print_report(r.overall);
    std::printf("images %d (missing preds %d)\n", r.images, r.missing_pred_files);
    for (const lanekit::CategoryReport& c : r.categories) {
      if (c.fp_only) {
        std::printf("\n[%s]  fp %lld (no ground truth)\n", c.category.c_str(),
                    c.report.per_threshold.front().fp);
      } else {
        std::printf("\n[%s]\n", c.category.c_str());
        print_report(c.report);
      }
    }
  }
  return 0;
}

// ---- bench ---------------------------------------------------------------

struct BenchArgs {
  int images = 64;
  long long liou_evals = 20000;
  int rows = 72;
};

int cmd_bench(const GlobalArgs& g, const BenchArgs& a) {
  const lanekit::Config cfg = make_config(g);
  const lanekit::BenchResult be =
      lanekit::bench_eval(a.images, g.jobs, g.seed, cfg.grid, cfg.eval);
  const lanekit::LiouBenchResult bl =
      lanekit::bench_liou(a.liou_evals, a.rows, g.seed);
  if (g.json) {
    ordered_json j;
    j["eval"] = {{"images", be.images},
                 {"seconds", be.seconds},
                 {"images_per_second", be.images_per_second},
                 {"mf1", be.mf1}};
    j["liou"] = {{"evals", bl.evals},
                 {"seconds", bl.seconds},
                 {"evals_per_second", bl.evals_per_second}};
    std::cout << j.dump() << "\n";
  } else {
    std::printf("eval  %d images in %.3f s -> %.1f images/s (mF1 %.4f)\n",
                be.images, be.seconds, be.images_per_second, be.mf1);
    std::printf("liou  %lld evals in %.3f s -> %.0f evals/s\n", bl.evals,
                bl.seconds, bl.evals_per_second);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lane-detection math toolkit: losses, assignment, NMS, metrics"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_flag("--json", g.json, "machine-readable JSON output");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for all randomness");

  LiouArgs liou_args;
  CLI::App* liou = app.add_subcommand("liou", "IoU, loss and gradient of two lanes");
  liou->add_option("--pred", liou_args.pred_file, "predicted xs file")->required();
  liou->add_option("--gt", liou_args.gt_file, "ground-truth xs file")->required();
  liou->add_option("--radius", liou_args.radius, "segment half-width in pixels");

  NmsArgs nms_args;
  CLI::App* nms = app.add_subcommand("nms", "score filter + lane NMS on a scene file");
  nms->add_option("--pred", nms_args.pred_file, "scene JSON with preds and scores")
      ->required();
  nms->add_option("--score-thresh", nms_args.score_thresh, "minimum score");
  nms->add_option("--iou-thresh", nms_args.iou_thresh, "suppression IoU");

  AssignArgs assign_args;
  CLI::App* assign = app.add_subcommand("assign", "positive-sample assignment table");
  assign->add_option("--priors", assign_args.priors_file, "scene JSON with priors")
      ->required();
  assign->add_option("--gt", assign_args.gt_file, "scene JSON with gts")->required();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a seeded synthetic scene file");
  synth->add_option("--out", synth_args.out_file, "output path (default stdout)");
  synth->add_option("--images", synth_args.images, "image count")
      ->check(CLI::PositiveNumber);
  synth->add_option("--lanes", synth_args.lanes, "gt lanes per image")
      ->check(CLI::PositiveNumber);
  synth->add_option("--priors", synth_args.priors, "priors per image")
      ->check(CLI::NonNegativeNumber);
  synth->add_flag("--features", synth_args.features, "include feature maps");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "dataset evaluation (F1 / accuracy)");
  eval->add_option("--pred", eval_args.pred_path, "prediction root or file")->required();
  eval->add_option("--gt", eval_args.gt_path, "ground-truth root or file")->required();
  eval->add_option("--list", eval_args.list_path, "image list (culane format)");
  eval->add_option("--format", eval_args.format, "culane|tusimple")
      ->check(CLI::IsMember({"culane", "tusimple"}));
  eval->add_option("--iou-mode", eval_args.iou_mode, "mask|line")
      ->check(CLI::IsMember({"mask", "line"}));
  eval->add_option("--line-width", eval_args.line_width, "lane thickness in pixels");
  eval->add_option("--category", eval_args.categories,
                   "NAME=FILE category split (repeatable)");
  eval->add_option("--render-dir", eval_args.render_dir, "write SVG scenes here");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "evaluation and loss throughput");
  bench->add_option("--images", bench_args.images, "synthetic images to evaluate")
      ->check(CLI::PositiveNumber);
  bench->add_option("--liou-evals", bench_args.liou_evals, "gradient evaluations")
      ->check(CLI::PositiveNumber);
  bench->add_option("--rows", bench_args.rows, "rows per lane")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::ostringstream message;
    message << e.what();
    emit_error(g, "usage", message.str());
    return kExitUsage;
  }

  try {
    if (*liou) return cmd_liou(g, liou_args);
    if (*nms) return cmd_nms(g, nms_args);
    if (*assign) return cmd_assign(g, assign_args);
    if (*synth) return cmd_synth(g, synth_args);
    if (*eval) return cmd_eval(g, eval_args);
    if (*bench) return cmd_bench(g, bench_args);
  } catch (const lanekit::Error& e) {
    emit_error(g, lanekit::to_string(e.kind()), e.what());
    return e.kind() == lanekit::ErrorKind::kConfig ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    emit_error(g, "internal", e.what());
    return kExitData;
  }
  return 0;
}
