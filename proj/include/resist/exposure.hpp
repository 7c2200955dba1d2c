#ifndef RESIST_EXPOSURE_HPP
#define RESIST_EXPOSURE_HPP

#include "resist/field.hpp"

namespace resist {

/// Dill exposure constants, with exposure dose folded into c_eff
/// (product of the rate constant C and the exposure time).
struct ExposureParams {
  double A = 0.0;            // bleachable absorption, 1/nm
  double B = 0.0;            // non-bleachable absorption, 1/nm
  double c_eff = 1.0;        // C * t_exp, per unit normalized intensity
  double thickness_nm = 75.0;
  int nz = 26;               // vertical slice count

  void validate() const;
  double dz_nm() const { return thickness_nm / (nz - 1); }
};

/// Closed-form inhibitor field for the bleach-free case (A = 0):
/// M(z,x,y) = exp(-c_eff * R(x,y) * exp(-B*z)). Throws if A != 0.
Field3D solve_exposure_closed_form(const Field2D& aerial,
                                   const ExposureParams& p);

/// General Dill system solved by time marching with nt steps:
/// alternately integrate the intensity down the column with exact
/// per-slab exponential attenuation, then advance the inhibitor via
/// M <- M * exp(-I * c_eff/nt). First-order accurate in 1/nt; exact
/// when A = 0.
Field3D solve_exposure_general(const Field2D& aerial, const ExposureParams& p,
                               int nt);

/// Diagnostic intensity profile for a given inhibitor state:
/// dI/dz = -I*(A*M + B) integrated from I(0) = R with per-slab
/// exponential attenuation (trapezoidal M between slices).
Field3D intensity_profile(const Field2D& aerial, const Field3D& inhibitor,
                          const ExposureParams& p);

}  // namespace resist

#endif
