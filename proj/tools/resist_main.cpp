// Command-line front end: simulate / calibrate / evaluate / bench /
// robustness / synth over manifest-described tile datasets.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "resist/config.hpp"
#include "resist/develop.hpp"
#include "resist/evalkit.hpp"
#include "resist/exposure.hpp"
#include "resist/field.hpp"
#include "resist/gradcal.hpp"
#include "resist/io.hpp"
#include "resist/kernels/kernels.hpp"
#include "resist/parallel.hpp"
#include "resist/synth.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace resist;

struct CliArgs {
  std::string config;
  std::string manifest;
  std::string params;
  std::string solver;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> resolution;
};

RunConfig resolve_config(const CliArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_config(a.config);
  if (!a.solver.empty())
    cfg.solver = a.solver == "fmm" ? Solver::kFmm : Solver::kVertical;
  if (a.seed) {
    cfg.seed = *a.seed;
    cfg.synth.seed = *a.seed;
  }
  if (a.resolution) cfg.output_resolution_nm = *a.resolution;
  if (cfg.output_resolution_nm <= 0.0)
    throw std::invalid_argument("resolution must be positive");
  kernels::force_backend(cfg.kernels);
  return cfg;
}

ResistParams resolve_params(const CliArgs& a, const RunConfig& cfg) {
  if (!a.params.empty()) return io::load_params(a.params);
  return cfg.params;
}

io::DatasetManifest require_manifest(const CliArgs& a) {
  if (a.manifest.empty())
    throw std::invalid_argument("this command requires --manifest");
  return io::load_manifest(a.manifest);
}

Field2D depth_for(const Field2D& aerial, const ResistParams& p,
                  Solver solver) {
  if (solver == Solver::kVertical) return forward_depth(aerial, p);
  const Field3D m = solve_exposure_closed_form(aerial, p.exposure);
  const Field3D rate = mack_rate(m, p.mack);
  return develop_fmm(rate, p.mack.t_dev).depth;
}

/// Binary prediction of the physical model at the requested pitch:
/// simulate at the native pitch, bilinearly upsample the depth map,
/// then binarize.
BinaryImage model_predict(const Field2D& aerial, const ResistParams& p,
                          Solver solver, double target_pitch_nm) {
  Field2D depth = depth_for(aerial, p, solver);
  if (std::abs(target_pitch_nm - depth.pitch_nm) > 1e-12)
    depth = resample_bilinear(depth, target_pitch_nm);
  return binarize(depth, p.tau);
}

/// Nearest-neighbor upsampling of a binary image (baseline predictions
/// have no sub-pixel structure to interpolate).
BinaryImage upsample_nn(const BinaryImage& src, double target_pitch_nm) {
  if (std::abs(target_pitch_nm - src.pitch_nm) < 1e-12) return src;
  const double sx = src.pitch_nm / target_pitch_nm;
  const int out_w = static_cast<int>(std::llround(src.width * sx));
  const int out_h = static_cast<int>(std::llround(src.height * sx));
  BinaryImage out = BinaryImage::zeros(out_w, out_h, target_pitch_nm);
  for (int y = 0; y < out_h; ++y) {
    int sy = static_cast<int>((y + 0.5) / sx);
    sy = std::clamp(sy, 0, src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      int xx = static_cast<int>((x + 0.5) / sx);
      xx = std::clamp(xx, 0, src.width - 1);
      out.at(x, y) = src.at(xx, sy);
    }
  }
  return out;
}

int cmd_synth(const CliArgs& a) {
  const RunConfig cfg = resolve_config(a);
  SynthConfig synth = cfg.synth;
  if (a.seed) synth.seed = *a.seed;
  const io::DatasetManifest manifest = synth_dataset(a.out, synth);
  int n_calib = 0;
  for (const auto& t : manifest.tiles)
    if (t.split == Split::kCalibration) ++n_calib;
  std::cout << "wrote " << manifest.tiles.size() << " tiles (" << n_calib
            << " calibration) to " << a.out << "\n";
  return 0;
}

int cmd_simulate(const CliArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const ResistParams params = resolve_params(a, cfg);
  const io::DatasetManifest manifest = require_manifest(a);
  fs::create_directories(a.out);

  const int n = static_cast<int>(manifest.tiles.size());
  parallel_for(n, [&](int i) {
    const auto& tile = manifest.tiles[i];
    const Field2D aerial = io::load_aerial(manifest.root / tile.aerial);

    Field2D depth;
    if (cfg.solver == Solver::kFmm) {
      const Field3D m = solve_exposure_closed_form(aerial, params.exposure);
      const Field3D rate = mack_rate(m, params.mack);
      FmmResult fmm = develop_fmm(rate, params.mack.t_dev);
      depth = std::move(fmm.depth);
      io::save_field3d_raw(fs::path(a.out) / (tile.id + "_arrival"),
                           fmm.arrival);
    } else {
      depth = forward_depth(aerial, params);
    }
    io::save_field_raw(fs::path(a.out) / (tile.id + "_depth"), depth);

    Field2D up = depth;
    if (std::abs(cfg.output_resolution_nm - depth.pitch_nm) > 1e-12)
      up = resample_bilinear(depth, cfg.output_resolution_nm);
    io::save_wafer_png(fs::path(a.out) / (tile.id + "_resist.png"),
                       binarize(up, params.tau));
  });
  std::cout << "simulated " << n << " tiles -> " << a.out << "\n";
  return 0;
}

int cmd_calibrate(const CliArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const ResistParams init = resolve_params(a, cfg);
  const io::DatasetManifest manifest = require_manifest(a);
  const std::vector<CalibRecord> records = io::load_records(manifest);

  AdamConfig opt = cfg.optimizer;
  opt.seed = cfg.seed;
  std::vector<LossTraceEntry> trace;
  const ResistParams fitted = calibrate(records, init, opt, &trace);

  fs::create_directories(a.out);
  io::ParamsProvenance prov;
  prov.seed = cfg.seed;
  prov.dataset_hash = io::file_hash_hex(a.manifest);
  prov.epochs = opt.epochs;
  io::save_params(fs::path(a.out) / "params.json", fitted, &prov);

  std::ostringstream table;
  table << "epoch\tbatch\tloss\tlr\n";
  for (const auto& e : trace)
    table << e.epoch << "\t" << e.batch << "\t" << e.loss << "\t" << e.lr
          << "\n";
  io::write_file_atomic(fs::path(a.out) / "loss_trace.tsv", table.str());

  std::cout << "calibrated over " << records.size() << " records; params -> "
            << (fs::path(a.out) / "params.json").string() << "\n";
  if (!trace.empty())
    std::cout << "final batch loss " << trace.back().loss << "\n";
  return 0;
}

struct TileMetrics {
  std::string id;
  double pd = 0.0;
  EpeReport epe;
};

int cmd_evaluate(const CliArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const ResistParams params = resolve_params(a, cfg);
  const io::DatasetManifest manifest = require_manifest(a);
  const std::vector<CalibRecord> records = io::load_records(manifest);

  const double fixed_thr = fit_fixed_threshold(records);
  const VarThresholdParams var_thr = fit_variable_threshold(records);

  std::vector<int> test_idx;
  for (int i = 0; i < static_cast<int>(manifest.tiles.size()); ++i)
    if (manifest.tiles[i].split == Split::kTest) test_idx.push_back(i);
  if (test_idx.empty()) throw std::invalid_argument("empty test split");

  const int n = static_cast<int>(test_idx.size());
  std::vector<TileMetrics> model(n), fixed(n), variable(n);
  parallel_for(n, [&](int k) {
    const auto& tile = manifest.tiles[test_idx[k]];
    const Field2D& aerial = records[test_idx[k]].aerial;

    // Ground truth: the fine-grid reference wafer when present and a
    // sub-pixel resolution was requested, otherwise the native wafer.
    BinaryImage gt;
    if (!tile.wafer_hires.empty() &&
        cfg.output_resolution_nm < manifest.pitch_nm) {
      gt = io::load_wafer(manifest.root / tile.wafer_hires,
                          cfg.output_resolution_nm);
    } else {
      gt = records[test_idx[k]].wafer;
    }

    const BinaryImage pred_model =
        model_predict(aerial, params, cfg.solver, gt.pitch_nm);
    const BinaryImage pred_fixed =
        upsample_nn(fixed_threshold_predict(aerial, fixed_thr), gt.pitch_nm);
    const BinaryImage pred_var =
        upsample_nn(variable_threshold_predict(aerial, var_thr), gt.pitch_nm);

    model[k] = {tile.id, pixel_difference(pred_model, gt),
                epe_stats(pred_model, gt)};
    fixed[k] = {tile.id, pixel_difference(pred_fixed, gt),
                epe_stats(pred_fixed, gt)};
    variable[k] = {tile.id, pixel_difference(pred_var, gt),
                   epe_stats(pred_var, gt)};
  });

  auto mean_pd = [](const std::vector<TileMetrics>& v) {
    double s = 0.0;
    for (const auto& m : v) s += m.pd;
    return s / static_cast<double>(v.size());
  };
  auto mean_epe = [](const std::vector<TileMetrics>& v) {
    double s = 0.0;
    for (const auto& m : v) s += m.epe.epe_mean_nm;
    return s / static_cast<double>(v.size());
  };

  fs::create_directories(a.out);
  std::ostringstream table;
  table << "tile\tmethod\tpixel_diff_pct\tepe_mean_nm\tepe_max_nm\n";
  for (int k = 0; k < n; ++k) {
    const struct {
      const char* name;
      const TileMetrics& m;
    } rows[] = {{"model", model[k]}, {"fixed", fixed[k]}, {"variable", variable[k]}};
    for (const auto& r : rows)
      table << r.m.id << "\t" << r.name << "\t" << r.m.pd << "\t"
            << r.m.epe.epe_mean_nm << "\t" << r.m.epe.epe_max_nm << "\n";
  }
  io::write_file_atomic(fs::path(a.out) / "metrics.tsv", table.str());

  const json summary = {
      {"tiles", n},
      {"resolution_nm", cfg.output_resolution_nm},
      {"fixed_threshold", fixed_thr},
      {"variable_threshold", {{"m1", var_thr.m1}, {"m2", var_thr.m2}}},
      {"model", {{"pixel_diff_pct", mean_pd(model)}, {"epe_mean_nm", mean_epe(model)}}},
      {"fixed", {{"pixel_diff_pct", mean_pd(fixed)}, {"epe_mean_nm", mean_epe(fixed)}}},
      {"variable",
       {{"pixel_diff_pct", mean_pd(variable)}, {"epe_mean_nm", mean_epe(variable)}}}};
  io::write_file_atomic(fs::path(a.out) / "summary.json",
                        summary.dump(2) + "\n");

  std::cout << "test tiles: " << n << " at " << cfg.output_resolution_nm
            << " nm\n"
            << "model     pixel diff " << mean_pd(model) << "%  epe "
            << mean_epe(model) << " nm\n"
            << "fixed     pixel diff " << mean_pd(fixed) << "%  epe "
            << mean_epe(fixed) << " nm\n"
            << "variable  pixel diff " << mean_pd(variable) << "%  epe "
            << mean_epe(variable) << " nm\n";
  return 0;
}

int cmd_bench(const CliArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const ResistParams params = resolve_params(a, cfg);
  const io::DatasetManifest manifest = require_manifest(a);
  if (manifest.tiles.empty()) throw std::invalid_argument("empty manifest");

  constexpr int kMinTiles = 20;
  constexpr int kWarmups = 3;
  std::vector<Field2D> aerials;
  for (int i = 0; i < kMinTiles; ++i) {
    const auto& tile = manifest.tiles[i % manifest.tiles.size()];
    aerials.push_back(io::load_aerial(manifest.root / tile.aerial));
  }

  auto run_at = [&](double pitch) {
    auto one = [&](const Field2D& aerial) {
      const Field2D* in = &aerial;
      Field2D resampled;
      if (std::abs(pitch - aerial.pitch_nm) > 1e-12) {
        resampled = resample_bilinear(aerial, pitch);
        in = &resampled;
      }
      const BinaryImage out = binarize(depth_for(*in, params, cfg.solver),
                                       params.tau);
      return out.size();
    };
    for (int w = 0; w < kWarmups; ++w) one(aerials[w % aerials.size()]);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t sink = 0;
    for (const Field2D& aerial : aerials) sink += one(aerial);
    const auto t1 = std::chrono::steady_clock::now();
    if (sink == 0) throw std::runtime_error("bench produced empty outputs");
    return std::chrono::duration<double, std::milli>(t1 - t0).count() /
           static_cast<double>(aerials.size());
  };

  const double coarse_ms = run_at(manifest.pitch_nm);
  const double fine_ms = run_at(cfg.output_resolution_nm);
  const double ratio = fine_ms / coarse_ms;

  fs::create_directories(a.out);
  const json report = {{"tiles", aerials.size()},
                       {"warmups", kWarmups},
                       {"coarse_pitch_nm", manifest.pitch_nm},
                       {"fine_pitch_nm", cfg.output_resolution_nm},
                       {"coarse_ms_per_tile", coarse_ms},
                       {"fine_ms_per_tile", fine_ms},
                       {"ratio", ratio},
                       {"kernels", kernels::active().name}};
  io::write_file_atomic(fs::path(a.out) / "bench.json", report.dump(2) + "\n");
  std::cout << "mean per tile: " << coarse_ms << " ms at " << manifest.pitch_nm
            << " nm, " << fine_ms << " ms at " << cfg.output_resolution_nm
            << " nm (ratio " << ratio << ", kernels "
            << kernels::active().name << ")\n";
  return 0;
}

int cmd_robustness(const CliArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const ResistParams params = resolve_params(a, cfg);
  const io::DatasetManifest manifest = require_manifest(a);
  const double fine = cfg.output_resolution_nm;

  std::vector<int> test_idx;
  for (int i = 0; i < static_cast<int>(manifest.tiles.size()); ++i)
    if (manifest.tiles[i].split == Split::kTest) test_idx.push_back(i);
  if (test_idx.empty()) throw std::invalid_argument("empty test split");

  const int n = static_cast<int>(test_idx.size());
  std::vector<double> diffs(n);
  parallel_for(n, [&](int k) {
    const auto& tile = manifest.tiles[test_idx[k]];
    const Field2D aerial = io::load_aerial(manifest.root / tile.aerial);
    // coarse path: simulate at the native pitch, upsample the depth map
    const BinaryImage coarse = model_predict(aerial, params, cfg.solver, fine);
    // fine path: resample the aerial first, simulate natively at `fine`
    const Field2D aerial_fine = resample_bilinear(aerial, fine);
    const BinaryImage native =
        binarize(depth_for(aerial_fine, params, cfg.solver), params.tau);
    diffs[k] = pixel_difference(coarse, native);
  });

  double mean = 0.0, worst = 0.0;
  for (double d : diffs) {
    mean += d;
    worst = std::max(worst, d);
  }
  mean /= static_cast<double>(n);

  fs::create_directories(a.out);
  const json report = {{"tiles", n},
                       {"coarse_pitch_nm", manifest.pitch_nm},
                       {"fine_pitch_nm", fine},
                       {"mean_pixel_diff_pct", mean},
                       {"max_pixel_diff_pct", worst}};
  io::write_file_atomic(fs::path(a.out) / "robustness.json",
                        report.dump(2) + "\n");
  std::cout << "cross-resolution pixel diff over " << n << " tiles: mean "
            << mean << "%, max " << worst << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable photoresist process simulator"};
  app.require_subcommand(1);

  CliArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "run configuration (JSON)");
    sub->add_option("--manifest", args.manifest, "dataset manifest (JSON)");
    sub->add_option("--params", args.params, "resist parameter file (JSON)");
    sub->add_option("--solver", args.solver, "development solver")
        ->check(CLI::IsMember({"vertical", "fmm"}));
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--seed", args.seed, "random seed override");
    sub->add_option("--resolution", args.resolution,
                    "output/evaluation pitch in nm");
    return sub;
  };
  CLI::App* synth = add_common(app.add_subcommand(
      "synth", "generate a synthetic aerial/wafer dataset"));
  CLI::App* simulate = add_common(app.add_subcommand(
      "simulate", "run the forward model over a manifest"));
  CLI::App* calibrate = add_common(app.add_subcommand(
      "calibrate", "fit resist parameters on the calibration split"));
  CLI::App* evaluate = add_common(app.add_subcommand(
      "evaluate", "metrics for the model and threshold baselines"));
  CLI::App* bench = add_common(
      app.add_subcommand("bench", "timing at coarse and fine pitches"));
  CLI::App* robustness = add_common(app.add_subcommand(
      "robustness", "cross-resolution consistency of fixed parameters"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(args);
    if (simulate->parsed()) return cmd_simulate(args);
    if (calibrate->parsed()) return cmd_calibrate(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (bench->parsed()) return cmd_bench(args);
    if (robustness->parsed()) return cmd_robustness(args);
  } catch (const io::LoadError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
