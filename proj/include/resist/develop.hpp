#ifndef RESIST_DEVELOP_HPP
#define RESIST_DEVELOP_HPP

#include <vector>

#include "resist/field.hpp"

namespace resist {

/// Mack development-rate constants.
struct MackParams {
  int n = 5;            // reaction order, >= 2
  double m_th = 0.5;    // inhibitor value at the rate-curve inflection
  double r_max = 10.0;  // nm/s
  double r_min = 0.1;   // nm/s, dark erosion
  double t_dev = 10.0;  // s

  void validate() const;
};

/// a = (n+1)/(n-1) * (1 - m_th)^n, the constant placing the rate-curve
/// inflection at M = m_th.
double inflection_a(int n, double m_th);

/// Pointwise development rate r(M) = r_max*(a+1)*(1-M)^n/(a+(1-M)^n) + r_min.
/// Inhibitor values must lie in [0,1] (tolerance 1e-9, clamped).
Field3D mack_rate(const Field3D& inhibitor, const MackParams& p);

/// Vertical-path development: per column, cumulative arrival time by
/// trapezoidal integration of 1/r down the column; the developed depth
/// is where the cumulative time reaches t_dev (linear interpolation
/// between slices, clamped to the resist thickness). Output is
/// normalized to [0,1] by the thickness.
Field2D develop_vertical(const Field3D& rate, double t_dev);

struct FmmResult {
  Field3D arrival;  // first-arrival time of the developer front, s
  Field2D depth;    // normalized developed depth at t_dev
};

/// Eikonal front propagation |grad T| = 1/r by first-order fast
/// marching from the whole top surface (T = 0 at z = 0). The depth map
/// is the per-column envelope T = t_dev.
FmmResult develop_fmm(const Field3D& rate, double t_dev);

struct GridIndex {
  int z, x, y;
};

/// Diagnostic fast-marching solve from explicit seed points.
Field3D fmm_arrival_from_seeds(const Field3D& rate,
                               const std::vector<GridIndex>& seeds);

/// Depth-map extraction from an arrival-time field: per column the
/// deepest z with T <= t_dev, interpolated, normalized by thickness.
Field2D envelope_depth(const Field3D& arrival, double t_dev);

}  // namespace resist

#endif
