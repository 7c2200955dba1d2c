#ifndef RESIST_SYNTH_HPP
#define RESIST_SYNTH_HPP

#include <cstdint>
#include <filesystem>

#include "resist/gradcal.hpp"
#include "resist/io.hpp"

namespace resist {

/// Synthetic dataset generator: random axis-aligned rectangle layouts
/// blurred by an analytic Gaussian kernel (erf profile) stand in for
/// aerial images; ground-truth wafers come from the reference forward
/// model at theta_star. NOT an optics model -- just a smooth, seeded
/// stand-in so the pipeline can be exercised end to end. External
/// aerials can be dropped in through the same manifest format.
struct SynthConfig {
  std::uint64_t seed = 42;
  int count = 64;
  int tile_px = 128;
  double pitch_nm = 7.0;
  double blur_sigma_nm = 20.0;
  double calib_fraction = 0.2;
  int min_rects = 2;
  int max_rects = 6;
  double min_feature_nm = 80.0;
  double max_feature_nm = 350.0;
  /// Also emit a 1 nm reference wafer per tile (native fine-grid run of
  /// the reference model) for sub-pixel evaluation.
  bool emit_hires_reference = true;
  ResistParams theta_star = reference_theta();

  /// Reference parameter set used for synthetic ground truth. B is
  /// penetrable so the depth profile stays responsive over the film.
  static ResistParams reference_theta();
};

/// Generate `count` tiles under `out_dir` and write a manifest
/// (dataset.json). Deterministic: the same config produces
/// byte-identical files.
io::DatasetManifest synth_dataset(const std::filesystem::path& out_dir,
                                  const SynthConfig& cfg);

/// Multiplicative perturbation of every calibratable parameter by a
/// seeded uniform draw in [-rel, +rel]; result re-clamped to domain.
ResistParams perturb_calibratable(const ResistParams& params, double rel,
                                  std::uint64_t seed);

}  // namespace resist

#endif
