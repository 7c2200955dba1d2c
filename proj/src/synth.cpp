#include "resist/synth.hpp"

#include <cstdio>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace resist {

namespace {

// uniform double in [0,1) with stable bit-level behavior across stdlibs
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double next_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * next_unit(rng);
}

struct Rect {
  double x0, x1, y0, y1;  // nm
};

// 1D profile of a unit slab [a,b] blurred by a Gaussian of width sigma
double erf_profile(double x, double a, double b, double sigma) {
  const double inv = 1.0 / (sigma * std::sqrt(2.0));
  return 0.5 * (std::erf((x - a) * inv) - std::erf((x - b) * inv));
}

Field2D sample_aerial(const std::vector<Rect>& rects, int width, int height,
                      double pitch_nm, double sigma) {
  Field2D f = Field2D::zeros(width, height, pitch_nm);
  for (int y = 0; y < height; ++y) {
    const double py = (y + 0.5) * pitch_nm;
    for (int x = 0; x < width; ++x) {
      const double px = (x + 0.5) * pitch_nm;
      // soft union: 1 - prod(1 - rect_i)
      double comp = 1.0;
      for (const Rect& r : rects) {
        const double v = erf_profile(px, r.x0, r.x1, sigma) *
                         erf_profile(py, r.y0, r.y1, sigma);
        comp *= 1.0 - std::clamp(v, 0.0, 1.0);
      }
      f.at(x, y) = 1.0 - comp;
    }
  }
  return f;
}

}  // namespace

ResistParams SynthConfig::reference_theta() {
  ResistParams p = ResistParams::defaults();
  p.exposure = {0.0, 0.002, 2.0, 75.0, 26};
  // fast-develop regime: t_dev is small so the optimizer's fixed-size
  // steps carry plenty of relative authority over the exposure threshold
  p.mack = {5, 0.45, 1000.0, 1.0, 0.1};
  p.tau = 0.5;
  p.s = 25.0;
  return p;
}

ResistParams perturb_calibratable(const ResistParams& params, double rel,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ResistParams out = params;
  for (int i = 0; i < kNumParams; ++i) {
    const double u = next_range(rng, -rel, rel);
    if (!params.calibratable[i]) continue;
    const Param p = static_cast<Param>(i);
    out.set(p, params.get(p) * (1.0 + u));
  }
  out.clamp_to_domain();
  return out;
}

io::DatasetManifest synth_dataset(const std::filesystem::path& out_dir,
                                  const SynthConfig& cfg) {
  if (cfg.count < 1) throw std::invalid_argument("synth_dataset: count < 1");
  cfg.theta_star.validate();
  std::filesystem::create_directories(out_dir);

  std::mt19937_64 rng(cfg.seed);
  const double extent = cfg.tile_px * cfg.pitch_nm;

  io::DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.pitch_nm = cfg.pitch_nm;
  manifest.seed = cfg.seed;

  // seeded split: choose round(calib_fraction*count) distinct tiles
  const int n_calib = static_cast<int>(
      std::llround(cfg.calib_fraction * static_cast<double>(cfg.count)));
  std::vector<int> order(cfg.count);
  for (int i = 0; i < cfg.count; ++i) order[i] = i;
  for (int i = cfg.count; i > 1; --i)
    std::swap(order[i - 1], order[rng() % static_cast<std::uint64_t>(i)]);
  std::vector<std::uint8_t> is_calib(cfg.count, 0);
  for (int i = 0; i < n_calib; ++i) is_calib[order[i]] = 1;

  for (int tile = 0; tile < cfg.count; ++tile) {
    const int n_rects =
        cfg.min_rects +
        static_cast<int>(rng() % static_cast<std::uint64_t>(
                                     cfg.max_rects - cfg.min_rects + 1));
    std::vector<Rect> rects;
    rects.reserve(n_rects);
    for (int r = 0; r < n_rects; ++r) {
      const double w = next_range(rng, cfg.min_feature_nm, cfg.max_feature_nm);
      const double h = next_range(rng, cfg.min_feature_nm, cfg.max_feature_nm);
      const double x0 = next_range(rng, 0.0, std::max(0.0, extent - w));
      const double y0 = next_range(rng, 0.0, std::max(0.0, extent - h));
      rects.push_back({x0, x0 + w, y0, y0 + h});
    }

    const Field2D aerial = sample_aerial(rects, cfg.tile_px, cfg.tile_px,
                                         cfg.pitch_nm, cfg.blur_sigma_nm);
    const Field2D depth = forward_depth(aerial, cfg.theta_star);
    const BinaryImage wafer = binarize(depth, cfg.theta_star.tau);

    char id[16];
    std::snprintf(id, sizeof(id), "t%04d", tile);
    io::ManifestTile entry;
    entry.id = id;
    entry.aerial = std::string(id) + "_aerial";
    entry.wafer = std::string(id) + "_wafer.png";
    entry.split = is_calib[tile] ? Split::kCalibration : Split::kTest;

    io::save_field_raw(out_dir / entry.aerial, aerial);
    io::save_wafer_png(out_dir / entry.wafer, wafer);

    if (cfg.emit_hires_reference) {
      const int px1 = static_cast<int>(std::llround(extent));
      const Field2D aerial1 =
          sample_aerial(rects, px1, px1, 1.0, cfg.blur_sigma_nm);
      const Field2D depth1 = forward_depth(aerial1, cfg.theta_star);
      const BinaryImage wafer1 = binarize(depth1, cfg.theta_star.tau);
      entry.wafer_hires = std::string(id) + "_wafer_1nm.png";
      io::save_wafer_png(out_dir / entry.wafer_hires, wafer1);
    }
    manifest.tiles.push_back(std::move(entry));
  }

  io::save_manifest(out_dir / "dataset.json", manifest);
  return manifest;
}

}  // namespace resist
