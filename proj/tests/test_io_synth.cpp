#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "resist/config.hpp"
#include "resist/evalkit.hpp"
#include "resist/io.hpp"
#include "resist/synth.hpp"

using namespace resist;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("resist_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Field2D random_field(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Field2D f = Field2D::zeros(w, h, 7.0);
  for (double& v : f.values) v = u(rng);
  return f;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("raw field round trip is bit-identical at float32") {
  TempDir tmp;
  std::mt19937_64 rng(61);
  const Field2D f = random_field(rng, 19, 7);
  io::save_field_raw(tmp.path / "f", f);
  const Field2D g = io::load_field_raw(tmp.path / "f");
  REQUIRE(g.width == f.width);
  REQUIRE(g.height == f.height);
  CHECK(g.pitch_nm == f.pitch_nm);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    CHECK(g.values[i] == static_cast<double>(static_cast<float>(f.values[i])));
  // saving the loaded copy again reproduces the same bytes
  io::save_field_raw(tmp.path / "g", g);
  CHECK(slurp(tmp.path / "f.raw") == slurp(tmp.path / "g.raw"));
}

TEST_CASE("missing sidecar is an error, not a silent default") {
  TempDir tmp;
  std::mt19937_64 rng(62);
  io::save_field_raw(tmp.path / "f", random_field(rng, 4, 4));
  fs::remove(tmp.path / "f.json");
  CHECK_THROWS_AS(io::load_field_raw(tmp.path / "f"), io::LoadError);
  CHECK_THROWS_AS(io::load_aerial(tmp.path / "does_not_exist"), io::LoadError);
}

TEST_CASE("aerial PNG path honors the sidecar intensity scale") {
  TempDir tmp;
  Field2D f = Field2D::zeros(3, 2, 7.0);
  f.at(0, 0) = 2.0;  // max pixel
  f.at(1, 0) = 1.0;
  io::save_aerial_png16(tmp.path / "a.png", f, 2.0);
  const Field2D g = io::load_aerial(tmp.path / "a.png");
  CHECK(g.pitch_nm == 7.0);
  CHECK(g.at(0, 0) == doctest::Approx(2.0));
  CHECK(g.at(1, 0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(g.at(2, 1) == doctest::Approx(0.0));
}

TEST_CASE("wafer PNG round trip and nonzero-means-one convention") {
  TempDir tmp;
  BinaryImage img = BinaryImage::zeros(9, 5, 7.0);
  img.at(0, 0) = 1;
  img.at(8, 4) = 1;
  img.at(4, 2) = 1;
  io::save_wafer_png(tmp.path / "w.png", img);
  const BinaryImage back = io::load_wafer(tmp.path / "w.png", 7.0);
  REQUIRE(back.width == 9);
  REQUIRE(back.height == 5);
  CHECK(back.values == img.values);
}

TEST_CASE("manifest rejects unknown keys and missing files") {
  TempDir tmp;
  std::ofstream(tmp.path / "m.json")
      << R"({"pitch_nm":7.0,"seed":1,"tiles":[],"bogus":1})";
  CHECK_THROWS_AS(io::load_manifest(tmp.path / "m.json"), io::LoadError);

  std::ofstream(tmp.path / "m2.json")
      << R"({"pitch_nm":7.0,"seed":1,"tiles":[{"id":"t0","aerial":"a","wafer":"w.png","split":"calibration"}]})";
  CHECK_THROWS_AS(io::load_manifest(tmp.path / "m2.json"), io::LoadError);
}

TEST_CASE("params round trip preserves values and the calibration mask") {
  TempDir tmp;
  ResistParams p = SynthConfig::reference_theta();
  p.calibratable.fill(false);
  p.calibratable[static_cast<int>(Param::kTau)] = true;
  p.calibratable[static_cast<int>(Param::kMTh)] = true;
  io::ParamsProvenance prov;
  prov.seed = 99;
  prov.dataset_hash = "abc";
  prov.epochs = 9;
  io::save_params(tmp.path / "p.json", p, &prov);
  const ResistParams q = io::load_params(tmp.path / "p.json");
  for (int i = 0; i < kNumParams; ++i) {
    CHECK(q.get(static_cast<Param>(i)) == p.get(static_cast<Param>(i)));
    CHECK(q.calibratable[i] == p.calibratable[i]);
  }
}

TEST_CASE("run config round trip and unknown-key rejection") {
  TempDir tmp;
  RunConfig cfg;
  cfg.solver = Solver::kFmm;
  cfg.seed = 1234;
  cfg.output_resolution_nm = 3.5;
  cfg.params.tau = 0.41;
  save_config(tmp.path / "c.json", cfg);
  const RunConfig back = load_config(tmp.path / "c.json");
  CHECK(back.solver == Solver::kFmm);
  CHECK(back.seed == 1234);
  CHECK(back.output_resolution_nm == 3.5);
  CHECK(back.params.tau == 0.41);

  std::ofstream(tmp.path / "bad.json") << R"({"solvr":"fmm"})";
  CHECK_THROWS_AS(load_config(tmp.path / "bad.json"), io::LoadError);
  std::ofstream(tmp.path / "bad2.json") << R"({"solver":"diagonal"})";
  CHECK_THROWS_AS(load_config(tmp.path / "bad2.json"), io::LoadError);
}

TEST_CASE("perturbation only touches calibratable parameters") {
  ResistParams p = SynthConfig::reference_theta();
  const ResistParams q = perturb_calibratable(p, 0.2, 5);
  for (int i = 0; i < kNumParams; ++i) {
    const Param prm = static_cast<Param>(i);
    if (!p.calibratable[i]) {
      CHECK(q.get(prm) == p.get(prm));
    } else {
      CHECK(std::abs(q.get(prm) - p.get(prm)) <=
            0.2 * std::abs(p.get(prm)) + 1e-12);
    }
  }
  // deterministic
  const ResistParams r = perturb_calibratable(p, 0.2, 5);
  for (int i = 0; i < kNumParams; ++i)
    CHECK(r.get(static_cast<Param>(i)) == q.get(static_cast<Param>(i)));
}

TEST_CASE("synthetic dataset: determinism, split, self-consistency") {
  TempDir tmp;
  SynthConfig cfg;
  cfg.count = 10;
  cfg.tile_px = 32;
  cfg.seed = 7;
  cfg.emit_hires_reference = false;

  const io::DatasetManifest m1 = synth_dataset(tmp.path / "a", cfg);
  const io::DatasetManifest m2 = synth_dataset(tmp.path / "b", cfg);
  REQUIRE(m1.tiles.size() == 10);

  int calib = 0;
  for (std::size_t i = 0; i < m1.tiles.size(); ++i) {
    CHECK(m1.tiles[i].split == m2.tiles[i].split);
    calib += m1.tiles[i].split == Split::kCalibration;
    CHECK(slurp(tmp.path / "a" / (m1.tiles[i].aerial + ".raw")) ==
          slurp(tmp.path / "b" / (m2.tiles[i].aerial + ".raw")));
    CHECK(slurp(tmp.path / "a" / m1.tiles[i].wafer) ==
          slurp(tmp.path / "b" / m2.tiles[i].wafer));
  }
  CHECK(calib == 2);  // 20% of 10

  // the reference model reproduces its own labels exactly
  const auto records = io::load_records(m1);
  for (const CalibRecord& r : records) {
    const BinaryImage pred =
        binarize(forward_depth(r.aerial, cfg.theta_star), cfg.theta_star.tau);
    CHECK(pixel_difference(pred, r.wafer) == 0.0);
  }
}

TEST_CASE("dataset hash is stable and content-sensitive") {
  TempDir tmp;
  std::ofstream(tmp.path / "x") << "hello";
  std::ofstream(tmp.path / "y") << "hello";
  std::ofstream(tmp.path / "z") << "hellp";
  CHECK(io::file_hash_hex(tmp.path / "x") == io::file_hash_hex(tmp.path / "y"));
  CHECK(io::file_hash_hex(tmp.path / "x") != io::file_hash_hex(tmp.path / "z"));
}
