#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "resist/evalkit.hpp"

using namespace resist;

namespace {

BinaryImage random_image(std::mt19937_64& rng, int w, int h,
                         double p_fg = 0.5) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BinaryImage img = BinaryImage::zeros(w, h, 7.0);
  for (auto& v : img.values) v = u(rng) < p_fg ? 1 : 0;
  return img;
}

// quadratic brute-force EPE oracle
EpeReport epe_brute(const BinaryImage& pred, const BinaryImage& gt) {
  const auto pb = extract_boundary(pred);
  const auto gb = extract_boundary(gt);
  EpeReport rep;
  if (gb.empty() && pb.empty()) return rep;
  if (gb.empty() || pb.empty()) {
    const double diag =
        std::hypot(gt.width * gt.pitch_nm, gt.height * gt.pitch_nm);
    rep.epe_mean_nm = rep.epe_max_nm = diag;
    rep.site_count = static_cast<int>(gb.size());
    rep.capped = true;
    return rep;
  }
  double sum = 0.0, worst = 0.0;
  for (const PixelCoord& g : gb) {
    double best = 1e300;
    for (const PixelCoord& p : pb) {
      const double dx = (g.x - p.x) * gt.pitch_nm;
      const double dy = (g.y - p.y) * gt.pitch_nm;
      best = std::min(best, dx * dx + dy * dy);
    }
    best = std::sqrt(best);
    sum += best;
    worst = std::max(worst, best);
  }
  rep.epe_mean_nm = sum / static_cast<double>(gb.size());
  rep.epe_max_nm = worst;
  rep.site_count = static_cast<int>(gb.size());
  return rep;
}

Field2D random_aerial(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field2D f = Field2D::zeros(w, h, 7.0);
  for (double& v : f.values) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("pixel difference: basics, symmetry, complement invariance") {
  std::mt19937_64 rng(51);
  const BinaryImage a = random_image(rng, 32, 24);
  BinaryImage b = a;
  CHECK(pixel_difference(a, b) == 0.0);
  b.values[5] ^= 1;
  b.values[700] ^= 1;
  CHECK(pixel_difference(a, b) ==
        doctest::Approx(100.0 * 2.0 / (32.0 * 24.0)));

  for (int trial = 0; trial < 100; ++trial) {
    const BinaryImage x = random_image(rng, 16, 16);
    const BinaryImage y = random_image(rng, 16, 16);
    const double d = pixel_difference(x, y);
    CHECK(pixel_difference(y, x) == d);  // symmetric
    BinaryImage xc = x, yc = y;
    for (auto& v : xc.values) v = 1 - v;
    for (auto& v : yc.values) v = 1 - v;
    CHECK(pixel_difference(xc, yc) == d);  // complement-invariant
  }
}

TEST_CASE("pixel difference rejects shape mismatches") {
  const BinaryImage a = BinaryImage::zeros(4, 4, 7.0);
  const BinaryImage b = BinaryImage::zeros(4, 5, 7.0);
  CHECK_THROWS_AS(pixel_difference(a, b), std::invalid_argument);
}

TEST_CASE("boundary of a solid 4x4 block is its 12-pixel perimeter") {
  BinaryImage img = BinaryImage::zeros(8, 8, 7.0);
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x) img.at(x, y) = 1;
  const auto b = extract_boundary(img);
  CHECK(b.size() == 12);
  for (const PixelCoord& c : b) {
    const bool edge = c.x == 2 || c.x == 5 || c.y == 2 || c.y == 5;
    CHECK(edge);
  }
}

TEST_CASE("image border counts as background for the boundary") {
  BinaryImage img = BinaryImage::zeros(3, 3, 7.0);
  for (auto& v : img.values) v = 1;
  // everything touches the border except the center... which touches
  // only foreground; 8 boundary pixels
  CHECK(extract_boundary(img).size() == 8);
}

TEST_CASE("epe_stats matches the brute-force oracle on random tiles") {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<int> dim(4, 64);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const BinaryImage pred = random_image(rng, w, h, 0.3);
    BinaryImage gt = pred;
    gt.values[rng() % gt.values.size()] ^= 1;
    const EpeReport fast = epe_stats(pred, gt);
    const EpeReport slow = epe_brute(pred, gt);
    CHECK(fast.site_count == slow.site_count);
    CHECK(fast.capped == slow.capped);
    CHECK(fast.epe_mean_nm == doctest::Approx(slow.epe_mean_nm).epsilon(1e-12));
    CHECK(fast.epe_max_nm == doctest::Approx(slow.epe_max_nm).epsilon(1e-12));
  }
}

TEST_CASE("epe_stats edge cases") {
  const BinaryImage empty = BinaryImage::zeros(8, 8, 7.0);
  BinaryImage square = BinaryImage::zeros(8, 8, 7.0);
  for (int y = 3; y < 6; ++y)
    for (int x = 3; x < 6; ++x) square.at(x, y) = 1;

  SUBCASE("both empty -> zero, uncapped") {
    const EpeReport r = epe_stats(empty, empty);
    CHECK(r.site_count == 0);
    CHECK(r.epe_mean_nm == 0.0);
    CHECK_FALSE(r.capped);
  }
  SUBCASE("one empty -> capped at the diagonal") {
    const EpeReport r = epe_stats(empty, square);
    CHECK(r.capped);
    CHECK(r.epe_mean_nm ==
          doctest::Approx(std::hypot(8 * 7.0, 8 * 7.0)));
  }
  SUBCASE("identical images -> zero error at every site") {
    const EpeReport r = epe_stats(square, square);
    CHECK(r.epe_mean_nm == 0.0);
    CHECK(r.epe_max_nm == 0.0);
    CHECK(r.site_count == 8);
  }
}

TEST_CASE("variable threshold matches a brute-force window maximum") {
  std::mt19937_64 rng(53);
  const Field2D aerial = random_aerial(rng, 20, 17);
  VarThresholdParams p{0.3, 0.35, 5};
  const BinaryImage got = variable_threshold_predict(aerial, p);
  for (int y = 0; y < 17; ++y) {
    for (int x = 0; x < 20; ++x) {
      double m = 0.0;
      for (int yy = std::max(0, y - 2); yy <= std::min(16, y + 2); ++yy)
        for (int xx = std::max(0, x - 2); xx <= std::min(19, x + 2); ++xx)
          m = std::max(m, aerial.at(xx, yy));
      const int want = aerial.at(x, y) > p.m1 + p.m2 * m ? 1 : 0;
      CHECK(got.at(x, y) == want);
    }
  }
  CHECK_THROWS_AS(variable_threshold_predict(aerial, {0.0, 0.0, 4}),
                  std::invalid_argument);
}

TEST_CASE("fixed threshold fit recovers a threshold-generated labeling") {
  std::mt19937_64 rng(54);
  const double truth = 0.37;
  std::vector<CalibRecord> ds;
  for (int i = 0; i < 4; ++i) {
    CalibRecord rec;
    rec.aerial = random_aerial(rng, 24, 24);
    rec.wafer = fixed_threshold_predict(rec.aerial, truth);
    ds.push_back(std::move(rec));
  }
  const double thr = fit_fixed_threshold(ds);
  double err = 0.0;
  for (const CalibRecord& r : ds)
    err += pixel_difference(fixed_threshold_predict(r.aerial, thr), r.wafer);
  CHECK(err == 0.0);  // perfect separation is attainable and found
}

TEST_CASE("variable threshold fit never loses to the fixed threshold") {
  std::mt19937_64 rng(55);
  std::vector<CalibRecord> ds;
  for (int i = 0; i < 3; ++i) {
    CalibRecord rec;
    rec.aerial = random_aerial(rng, 24, 24);
    rec.wafer = random_image(rng, 24, 24, 0.4);
    ds.push_back(std::move(rec));
  }
  const double thr = fit_fixed_threshold(ds);
  const VarThresholdParams vp = fit_variable_threshold(ds);
  double fixed_err = 0.0, var_err = 0.0;
  for (const CalibRecord& r : ds) {
    fixed_err +=
        pixel_difference(fixed_threshold_predict(r.aerial, thr), r.wafer);
    var_err +=
        pixel_difference(variable_threshold_predict(r.aerial, vp), r.wafer);
  }
  CHECK(var_err <= fixed_err + 1e-12);  // nested model on the fit split
}

TEST_CASE("variable threshold fit prefers m2 = 0 without real signal") {
  std::mt19937_64 rng(56);
  std::vector<CalibRecord> ds;
  for (int i = 0; i < 3; ++i) {
    CalibRecord rec;
    rec.aerial = random_aerial(rng, 24, 24);
    rec.wafer = fixed_threshold_predict(rec.aerial, 0.52);
    ds.push_back(std::move(rec));
  }
  const VarThresholdParams vp = fit_variable_threshold(ds);
  CHECK(vp.m2 == 0.0);
}
