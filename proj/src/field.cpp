#include "resist/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace resist {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}

}  // namespace

Field2D Field2D::zeros(int width, int height, double pitch_nm) {
  return constant(width, height, pitch_nm, 0.0);
}

Field2D Field2D::constant(int width, int height, double pitch_nm, double v) {
  if (width <= 0 || height <= 0 || pitch_nm <= 0.0)
    throw std::invalid_argument("Field2D: non-positive dimension or pitch");
  Field2D f;
  f.width = width;
  f.height = height;
  f.pitch_nm = pitch_nm;
  f.values.assign(static_cast<std::size_t>(width) * height, v);
  return f;
}

void Field2D::validate() const {
  if (width <= 0 || height <= 0 || pitch_nm <= 0.0)
    throw std::invalid_argument("Field2D: non-positive dimension or pitch");
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("Field2D: value count mismatch");
  check_finite(values, "Field2D");
}

Field3D Field3D::zeros(int nz, int width, int height, double pitch_nm,
                       double dz_nm) {
  if (nz < 2 || width <= 0 || height <= 0 || pitch_nm <= 0.0 || dz_nm <= 0.0)
    throw std::invalid_argument("Field3D: bad dimensions");
  Field3D f;
  f.nz = nz;
  f.width = width;
  f.height = height;
  f.pitch_nm = pitch_nm;
  f.dz_nm = dz_nm;
  f.values.assign(static_cast<std::size_t>(nz) * width * height, 0.0);
  return f;
}

void Field3D::validate() const {
  if (nz < 2 || width <= 0 || height <= 0 || pitch_nm <= 0.0 || dz_nm <= 0.0)
    throw std::invalid_argument("Field3D: bad dimensions");
  if (values.size() != static_cast<std::size_t>(nz) * width * height)
    throw std::invalid_argument("Field3D: value count mismatch");
  check_finite(values, "Field3D");
}

BinaryImage BinaryImage::zeros(int width, int height, double pitch_nm) {
  if (width <= 0 || height <= 0 || pitch_nm <= 0.0)
    throw std::invalid_argument("BinaryImage: non-positive dimension or pitch");
  BinaryImage b;
  b.width = width;
  b.height = height;
  b.pitch_nm = pitch_nm;
  b.values.assign(static_cast<std::size_t>(width) * height, 0);
  return b;
}

void BinaryImage::validate() const {
  if (width <= 0 || height <= 0 || pitch_nm <= 0.0)
    throw std::invalid_argument("BinaryImage: non-positive dimension or pitch");
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("BinaryImage: value count mismatch");
  for (std::uint8_t v : values)
    if (v > 1) throw std::invalid_argument("BinaryImage: value not in {0,1}");
}

Field2D resample_bilinear(const Field2D& src, double target_pitch_nm) {
  src.validate();
  if (target_pitch_nm <= 0.0)
    throw std::invalid_argument("resample_bilinear: non-positive pitch");
  const int out_w =
      static_cast<int>(std::llround(src.width * src.pitch_nm / target_pitch_nm));
  const int out_h =
      static_cast<int>(std::llround(src.height * src.pitch_nm / target_pitch_nm));
  if (out_w <= 0 || out_h <= 0)
    throw std::invalid_argument("resample_bilinear: empty output grid");

  Field2D out = Field2D::zeros(out_w, out_h, target_pitch_nm);
  const double scale = target_pitch_nm / src.pitch_nm;
  for (int j = 0; j < out_h; ++j) {
    const double sy = std::clamp((j + 0.5) * scale - 0.5, 0.0,
                                 static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - y0;
    for (int i = 0; i < out_w; ++i) {
      const double sx = std::clamp((i + 0.5) * scale - 0.5, 0.0,
                                   static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = sx - x0;
      const double top = src.at(x0, y0) + fx * (src.at(x1, y0) - src.at(x0, y0));
      const double bot = src.at(x0, y1) + fx * (src.at(x1, y1) - src.at(x0, y1));
      out.at(i, j) = top + fy * (bot - top);
    }
  }
  return out;
}

BinaryImage binarize(const Field2D& depth, double tau) {
  depth.validate();
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("binarize: tau must lie in (0,1)");
  BinaryImage out = BinaryImage::zeros(depth.width, depth.height, depth.pitch_nm);
  for (std::size_t i = 0; i < depth.values.size(); ++i)
    out.values[i] = depth.values[i] > tau ? 1 : 0;
  return out;
}

}  // namespace resist
