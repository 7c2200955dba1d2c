#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "resist/field.hpp"

using namespace resist;

TEST_CASE("field validation rejects broken invariants") {
  Field2D f = Field2D::zeros(4, 3, 7.0);
  CHECK_NOTHROW(f.validate());
  f.pitch_nm = 0.0;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.pitch_nm = 7.0;
  f.values.pop_back();
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.values.push_back(std::nan(""));
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);

  BinaryImage b = BinaryImage::zeros(2, 2, 1.0);
  CHECK_NOTHROW(b.validate());
  b.values[1] = 2;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

TEST_CASE("resample keeps the physical extent and pixel count arithmetic") {
  const Field2D src = Field2D::constant(128, 128, 7.0, 0.25);
  const Field2D dst = resample_bilinear(src, 1.0);
  CHECK(dst.width == 896);
  CHECK(dst.height == 896);
  CHECK(dst.pitch_nm == doctest::Approx(1.0));
  for (double v : dst.values) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("resample at the same pitch is the identity") {
  Field2D src = Field2D::zeros(16, 9, 7.0);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 16; ++x) src.at(x, y) = std::sin(0.3 * x + 0.7 * y);
  const Field2D dst = resample_bilinear(src, 7.0);
  REQUIRE(dst.width == src.width);
  REQUIRE(dst.height == src.height);
  for (std::size_t i = 0; i < src.values.size(); ++i)
    CHECK(dst.values[i] == doctest::Approx(src.values[i]).epsilon(1e-12));
}

TEST_CASE("bilinear resampling is exact for affine fields away from edges") {
  Field2D src = Field2D::zeros(32, 32, 6.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) src.at(x, y) = 2.0 + 0.5 * x - 0.25 * y;
  const Field2D dst = resample_bilinear(src, 2.0);
  REQUIRE(dst.width == 96);
  // interior target pixels interpolate between interior sources; the
  // affine field must be reproduced exactly there (clamped edges differ)
  for (int y = 8; y < dst.height - 8; ++y) {
    for (int x = 8; x < dst.width - 8; ++x) {
      const double sx = (x + 0.5) * (2.0 / 6.0) - 0.5;
      const double sy = (y + 0.5) * (2.0 / 6.0) - 0.5;
      const double want = 2.0 + 0.5 * sx - 0.25 * sy;
      CHECK(dst.at(x, y) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("resampled values stay within the source range") {
  Field2D src = Field2D::zeros(17, 13, 7.0);
  for (int y = 0; y < 13; ++y)
    for (int x = 0; x < 17; ++x)
      src.at(x, y) = 0.5 + 0.5 * std::sin(1.3 * x) * std::cos(0.9 * y);
  const Field2D dst = resample_bilinear(src, 1.9);
  for (double v : dst.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("binarize uses a strict greater-than at tau") {
  Field2D f = Field2D::zeros(3, 1, 1.0);
  f.at(0, 0) = 0.5;
  f.at(1, 0) = 0.5 + 1e-12;
  f.at(2, 0) = 0.4;
  const BinaryImage b = binarize(f, 0.5);
  CHECK(b.at(0, 0) == 0);
  CHECK(b.at(1, 0) == 1);
  CHECK(b.at(2, 0) == 0);
  CHECK_THROWS_AS(binarize(f, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(binarize(f, 1.0), std::invalid_argument);
}
