#include "resist/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "resist/kernels/kernels.hpp"

namespace resist {

void ExposureParams::validate() const {
  if (A < 0.0 || B < 0.0 || c_eff <= 0.0 || thickness_nm <= 0.0 || nz < 2)
    throw std::invalid_argument("ExposureParams: invalid value");
}

namespace {

void check_aerial(const Field2D& aerial) {
  aerial.validate();
  for (double v : aerial.values)
    if (v < 0.0)
      throw std::invalid_argument("aerial image has negative intensity");
}

}  // namespace

Field3D solve_exposure_closed_form(const Field2D& aerial,
                                   const ExposureParams& p) {
  p.validate();
  check_aerial(aerial);
  if (p.A != 0.0)
    throw std::invalid_argument(
        "closed-form exposure requires A = 0; use the general solver");

  const auto& k = kernels::active();
  Field3D m = Field3D::zeros(p.nz, aerial.width, aerial.height, aerial.pitch_nm,
                             p.dz_nm());
  for (int kz = 0; kz < p.nz; ++kz) {
    const double z = kz * p.dz_nm();
    const double scale = -p.c_eff * std::exp(-p.B * z);
    k.exp_scaled(m.slice(kz).data(), aerial.values.data(), scale,
                 m.slice_size());
  }
  return m;
}

Field3D solve_exposure_general(const Field2D& aerial, const ExposureParams& p,
                               int nt) {
  p.validate();
  check_aerial(aerial);
  if (nt < 2) throw std::invalid_argument("solve_exposure_general: nt < 2");

  const auto& k = kernels::active();
  const std::size_t npix = aerial.size();
  const double dz = p.dz_nm();
  const double dc = p.c_eff / nt;

  Field3D m = Field3D::zeros(p.nz, aerial.width, aerial.height, aerial.pitch_nm,
                             dz);
  for (double& v : m.values) v = 1.0;

  std::vector<double> intensity(npix);
  std::vector<double> tmp(npix);

  for (int step = 0; step < nt; ++step) {
    // top boundary: I(0) = R, then attenuate slab by slab
    intensity = aerial.values;
    // top slice inhibitor update
    k.exp_scaled(tmp.data(), intensity.data(), -dc, npix);
    {
      auto s0 = m.slice(0);
      for (std::size_t i = 0; i < npix; ++i) s0[i] *= tmp[i];
    }
    for (int kz = 1; kz < p.nz; ++kz) {
      auto prev = m.slice(kz - 1);
      auto cur = m.slice(kz);
      // slab absorption uses the trapezoidal mean of M over the slab
      for (std::size_t i = 0; i < npix; ++i)
        tmp[i] = -dz * (p.A * 0.5 * (prev[i] + cur[i]) + p.B);
      k.vexp(tmp.data(), tmp.data(), npix);
      for (std::size_t i = 0; i < npix; ++i) intensity[i] *= tmp[i];
      // advance inhibitor at this slice
      k.exp_scaled(tmp.data(), intensity.data(), -dc, npix);
      for (std::size_t i = 0; i < npix; ++i) cur[i] *= tmp[i];
    }
  }
  return m;
}

Field3D intensity_profile(const Field2D& aerial, const Field3D& inhibitor,
                          const ExposureParams& p) {
  p.validate();
  check_aerial(aerial);
  inhibitor.validate();
  if (inhibitor.width != aerial.width || inhibitor.height != aerial.height ||
      inhibitor.nz != p.nz)
    throw std::invalid_argument("intensity_profile: shape mismatch");

  const auto& k = kernels::active();
  const std::size_t npix = aerial.size();
  const double dz = p.dz_nm();

  Field3D out = Field3D::zeros(p.nz, aerial.width, aerial.height,
                               aerial.pitch_nm, dz);
  std::vector<double> tmp(npix);
  std::copy(aerial.values.begin(), aerial.values.end(), out.slice(0).begin());
  for (int kz = 1; kz < p.nz; ++kz) {
    auto mp = inhibitor.slice(kz - 1);
    auto mc = inhibitor.slice(kz);
    for (std::size_t i = 0; i < npix; ++i)
      tmp[i] = -dz * (p.A * 0.5 * (mp[i] + mc[i]) + p.B);
    k.vexp(tmp.data(), tmp.data(), npix);
    auto prev = out.slice(kz - 1);
    auto cur = out.slice(kz);
    for (std::size_t i = 0; i < npix; ++i) cur[i] = prev[i] * tmp[i];
  }
  return out;
}

}  // namespace resist
