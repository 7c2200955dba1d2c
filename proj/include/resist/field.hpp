#ifndef RESIST_FIELD_HPP
#define RESIST_FIELD_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace resist {

/// Lateral scalar grid (aerial image, depth map). Row-major, pixel
/// centers anchor the physical extent; pitch_nm is the size of one
/// pixel.
struct Field2D {
  int width = 0;
  int height = 0;
  double pitch_nm = 0.0;
  std::vector<double> values;  // row-major, height*width

  static Field2D zeros(int width, int height, double pitch_nm);
  static Field2D constant(int width, int height, double pitch_nm, double v);

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return values.size(); }

  // Throws std::invalid_argument on broken invariants (non-positive
  // dims/pitch, size mismatch, non-finite values).
  void validate() const;
};

/// Resist-volume scalar grid. Storage is z-major then row-major, so a
/// z-slice is contiguous. z runs from the resist top (z=0) downward;
/// slice k sits at depth k*dz_nm.
struct Field3D {
  int nz = 0;
  int width = 0;
  int height = 0;
  double pitch_nm = 0.0;
  double dz_nm = 0.0;
  std::vector<double> values;  // nz*height*width

  static Field3D zeros(int nz, int width, int height, double pitch_nm,
                       double dz_nm);

  std::size_t slice_size() const {
    return static_cast<std::size_t>(width) * height;
  }
  std::span<double> slice(int k) {
    return {values.data() + k * slice_size(), slice_size()};
  }
  std::span<const double> slice(int k) const {
    return {values.data() + k * slice_size(), slice_size()};
  }
  double& at(int z, int x, int y) {
    return values[(static_cast<std::size_t>(z) * height + y) * width + x];
  }
  double at(int z, int x, int y) const {
    return values[(static_cast<std::size_t>(z) * height + y) * width + x];
  }
  double thickness_nm() const { return (nz - 1) * dz_nm; }

  void validate() const;
};

/// Thresholded wafer/resist pattern; 1 = resist removed
/// (developed-through), 0 = resist present.
struct BinaryImage {
  int width = 0;
  int height = 0;
  double pitch_nm = 0.0;
  std::vector<std::uint8_t> values;  // row-major, each exactly 0 or 1

  static BinaryImage zeros(int width, int height, double pitch_nm);

  std::uint8_t& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return values.size(); }

  void validate() const;
};

/// Resample onto a grid with the given pitch covering the same physical
/// extent. Bilinear interpolation, clamp-to-edge borders.
Field2D resample_bilinear(const Field2D& src, double target_pitch_nm);

/// Threshold a normalized depth map: 1 where depth > tau, else 0.
/// tau must lie in (0,1).
BinaryImage binarize(const Field2D& depth, double tau);

}  // namespace resist

#endif
