#ifndef RESIST_EVALKIT_HPP
#define RESIST_EVALKIT_HPP

#include <vector>

#include "resist/field.hpp"
#include "resist/gradcal.hpp"

namespace resist {

struct PixelCoord {
  int x, y;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct EpeReport {
  double epe_mean_nm = 0.0;
  double epe_max_nm = 0.0;
  int site_count = 0;
  bool capped = false;  // one boundary set was empty; cap distance reported
};

/// Percentage of differing pixels (normalized L0 distance * 100).
double pixel_difference(const BinaryImage& pred, const BinaryImage& gt);

/// Foreground pixels with at least one 4-neighbor background pixel;
/// the image border counts as background.
std::vector<PixelCoord> extract_boundary(const BinaryImage& img);

/// Edge placement error: for every ground-truth boundary pixel, the
/// Euclidean distance (nm) to the nearest predicted boundary pixel.
/// If exactly one boundary set is empty the image diagonal is reported
/// and the result flagged as capped.
EpeReport epe_stats(const BinaryImage& pred, const BinaryImage& gt);

/// Baseline: aerial > thr.
BinaryImage fixed_threshold_predict(const Field2D& aerial, double thr);

struct VarThresholdParams {
  double m1 = 0.0;
  double m2 = 0.0;
  int window_px = 21;  // odd
};

/// Baseline: aerial > m1 + m2 * (local max of aerial over a centered
/// window, clamped at the borders).
BinaryImage variable_threshold_predict(const Field2D& aerial,
                                       const VarThresholdParams& p);

/// Fit thr minimizing mean pixel difference over the calibration split
/// (grid search + golden-section refinement).
double fit_fixed_threshold(std::span<const CalibRecord> dataset);

/// Fit (m1, m2) by coarse-to-fine grid search, window fixed.
VarThresholdParams fit_variable_threshold(std::span<const CalibRecord> dataset,
                                          int window_px = 21);

}  // namespace resist

#endif
