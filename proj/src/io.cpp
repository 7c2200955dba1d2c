#include "resist/io.hpp"

#include <algorithm>
#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace resist::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> keys,
                         const fs::path& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) known = true;
    if (!known)
      throw LoadError("unknown key '" + it.key() + "' in " + path.string());
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw LoadError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_field_raw(const fs::path& base, const Field2D& field) {
  field.validate();
  std::vector<float> buf(field.values.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<float>(field.values[i]);
  std::string raw(reinterpret_cast<const char*>(buf.data()),
                  buf.size() * sizeof(float));
  write_file_atomic(fs::path(base.string() + ".raw"), raw);

  json meta = {{"width", field.width},
               {"height", field.height},
               {"pitch_nm", field.pitch_nm},
               {"dtype", "float32"},
               {"order", "row-major"}};
  write_file_atomic(fs::path(base.string() + ".json"), meta.dump(2) + "\n");
}

Field2D load_field_raw(const fs::path& base) {
  const fs::path meta_path(base.string() + ".json");
  const fs::path raw_path(base.string() + ".raw");
  if (!fs::exists(meta_path))
    throw LoadError("missing sidecar " + meta_path.string());
  const json meta = parse_json_file(meta_path);
  reject_unknown_keys(
      meta, {"width", "height", "pitch_nm", "dtype", "order", "intensity_scale"},
      meta_path);
  const int w = meta.at("width").get<int>();
  const int h = meta.at("height").get<int>();
  const double pitch = meta.at("pitch_nm").get<double>();
  if (meta.at("dtype").get<std::string>() != "float32")
    throw LoadError("unsupported dtype in " + meta_path.string());

  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + raw_path.string());
  Field2D field = Field2D::zeros(w, h, pitch);
  std::vector<float> buf(field.values.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
    throw LoadError("truncated raw data in " + raw_path.string());
  for (std::size_t i = 0; i < buf.size(); ++i)
    field.values[i] = static_cast<double>(buf[i]);
  field.validate();
  return field;
}

void save_field3d_raw(const fs::path& base, const Field3D& field) {
  field.validate();
  std::vector<float> buf(field.values.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<float>(field.values[i]);
  std::string raw(reinterpret_cast<const char*>(buf.data()),
                  buf.size() * sizeof(float));
  write_file_atomic(fs::path(base.string() + ".raw"), raw);
  json meta = {{"nz", field.nz},          {"width", field.width},
               {"height", field.height},  {"pitch_nm", field.pitch_nm},
               {"dz_nm", field.dz_nm},    {"dtype", "float32"},
               {"order", "z-major"}};
  write_file_atomic(fs::path(base.string() + ".json"), meta.dump(2) + "\n");
}

Field3D load_field3d_raw(const fs::path& base) {
  const fs::path meta_path(base.string() + ".json");
  const fs::path raw_path(base.string() + ".raw");
  if (!fs::exists(meta_path))
    throw LoadError("missing sidecar " + meta_path.string());
  const json meta = parse_json_file(meta_path);
  reject_unknown_keys(
      meta, {"nz", "width", "height", "pitch_nm", "dz_nm", "dtype", "order"},
      meta_path);
  Field3D field = Field3D::zeros(
      meta.at("nz").get<int>(), meta.at("width").get<int>(),
      meta.at("height").get<int>(), meta.at("pitch_nm").get<double>(),
      meta.at("dz_nm").get<double>());
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + raw_path.string());
  std::vector<float> buf(field.values.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
    throw LoadError("truncated raw data in " + raw_path.string());
  for (std::size_t i = 0; i < buf.size(); ++i)
    field.values[i] = static_cast<double>(buf[i]);
  field.validate();
  return field;
}

namespace {

struct PngImage {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> pixels;
};

PngImage read_png_gray(const fs::path& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw LoadError("cannot open " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw LoadError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw LoadError("corrupt PNG " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_expand(png);  // palette/low-bit-depth to 8 bit
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16)
    png_set_swap(png);  // stored big-endian
  png_read_update_info(png, info);

  PngImage img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.bit_depth = png_get_bit_depth(png, info);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);

  std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < img.width; ++x) {
      std::uint16_t v;
      if (img.bit_depth == 16) {
        std::memcpy(&v, row.data() + 2 * x, 2);
      } else {
        v = row[x];
      }
      img.pixels[static_cast<std::size_t>(y) * img.width + x] = v;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

void write_png_gray(const fs::path& path, const void* pixels, int width,
                    int height, int bit_depth) {
  const fs::path tmp = path.string() + ".tmp";
  FILE* fp = std::fopen(tmp.c_str(), "wb");
  if (!fp) throw LoadError("cannot write " + tmp.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw LoadError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw LoadError("PNG write failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  const std::size_t stride =
      static_cast<std::size_t>(width) * (bit_depth == 16 ? 2 : 1);
  const auto* bytes = static_cast<const std::uint8_t*>(pixels);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(bytes + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
  fs::rename(tmp, path);
}

}  // namespace

void save_png_gray8(const fs::path& path, const std::vector<std::uint8_t>& px,
                    int width, int height) {
  write_png_gray(path, px.data(), width, height, 8);
}

void save_png_gray16(const fs::path& path, const std::vector<std::uint16_t>& px,
                     int width, int height) {
  write_png_gray(path, px.data(), width, height, 16);
}

Field2D load_aerial(const fs::path& path) {
  if (path.extension() == ".png") {
    const fs::path sidecar(path.string() + ".json");
    if (!fs::exists(sidecar))
      throw LoadError("missing sidecar " + sidecar.string());
    const json meta = parse_json_file(sidecar);
    reject_unknown_keys(meta, {"pitch_nm", "intensity_scale"}, sidecar);
    const double pitch = meta.at("pitch_nm").get<double>();
    const double scale = meta.at("intensity_scale").get<double>();

    const PngImage img = read_png_gray(path);
    const double maxval = img.bit_depth == 16 ? 65535.0 : 255.0;
    Field2D field = Field2D::zeros(img.width, img.height, pitch);
    for (std::size_t i = 0; i < field.values.size(); ++i)
      field.values[i] = img.pixels[i] / maxval * scale;
    return field;
  }
  // raw float32 route; accept either the basename or one of its parts
  std::string base = path.string();
  if (path.extension() == ".raw" || path.extension() == ".json")
    base = base.substr(0, base.size() - path.extension().string().size());
  return load_field_raw(base);
}

void save_aerial_png16(const fs::path& path, const Field2D& field,
                       double intensity_scale) {
  field.validate();
  if (intensity_scale <= 0.0)
    throw std::invalid_argument("save_aerial_png16: non-positive scale");
  std::vector<std::uint16_t> px(field.values.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = field.values[i] / intensity_scale * 65535.0;
    px[i] = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 65535.0)));
  }
  save_png_gray16(path, px, field.width, field.height);
  json meta = {{"pitch_nm", field.pitch_nm},
               {"intensity_scale", intensity_scale}};
  write_file_atomic(fs::path(path.string() + ".json"), meta.dump(2) + "\n");
}

BinaryImage load_wafer(const fs::path& path, double pitch_nm) {
  const PngImage img = read_png_gray(path);
  BinaryImage out = BinaryImage::zeros(img.width, img.height, pitch_nm);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = img.pixels[i] ? 1 : 0;
  return out;
}

void save_wafer_png(const fs::path& path, const BinaryImage& img) {
  img.validate();
  std::vector<std::uint8_t> px(img.values.size());
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = img.values[i] ? 255 : 0;
  save_png_gray8(path, px, img.width, img.height);
}

DatasetManifest load_manifest(const fs::path& path) {
  const json j = parse_json_file(path);
  reject_unknown_keys(j, {"pitch_nm", "seed", "tiles"}, path);
  DatasetManifest m;
  m.root = path.parent_path();
  m.pitch_nm = j.at("pitch_nm").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const json& t : j.at("tiles")) {
    reject_unknown_keys(t, {"id", "aerial", "wafer", "wafer_hires", "split"},
                        path);
    ManifestTile tile;
    tile.id = t.at("id").get<std::string>();
    tile.aerial = t.at("aerial").get<std::string>();
    tile.wafer = t.at("wafer").get<std::string>();
    if (t.contains("wafer_hires"))
      tile.wafer_hires = t.at("wafer_hires").get<std::string>();
    const std::string split = t.at("split").get<std::string>();
    if (split == "calibration") {
      tile.split = Split::kCalibration;
    } else if (split == "test") {
      tile.split = Split::kTest;
    } else {
      throw LoadError("bad split '" + split + "' in " + path.string());
    }
    m.tiles.push_back(std::move(tile));
  }
  for (const ManifestTile& t : m.tiles) {
    for (const std::string& rel : {t.aerial, t.wafer}) {
      fs::path p = m.root / rel;
      if (p.extension() != ".png") p = fs::path(p.string() + ".raw");
      if (!fs::exists(p))
        throw LoadError("manifest references missing file " + p.string());
    }
  }
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json tiles = json::array();
  for (const ManifestTile& t : manifest.tiles) {
    json tile = {{"id", t.id},
                 {"aerial", t.aerial},
                 {"wafer", t.wafer},
                 {"split", t.split == Split::kCalibration ? "calibration"
                                                          : "test"}};
    if (!t.wafer_hires.empty()) tile["wafer_hires"] = t.wafer_hires;
    tiles.push_back(std::move(tile));
  }
  const json j = {{"pitch_nm", manifest.pitch_nm},
                  {"seed", manifest.seed},
                  {"tiles", std::move(tiles)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<CalibRecord> load_records(const DatasetManifest& manifest) {
  std::vector<CalibRecord> records;
  records.reserve(manifest.tiles.size());
  for (const ManifestTile& t : manifest.tiles) {
    CalibRecord rec;
    rec.aerial = load_aerial(manifest.root / t.aerial);
    rec.wafer = load_wafer(manifest.root / t.wafer, manifest.pitch_nm);
    rec.split = t.split;
    if (rec.aerial.width != rec.wafer.width ||
        rec.aerial.height != rec.wafer.height)
      throw LoadError("tile " + t.id + ": aerial/wafer dimension mismatch");
    records.push_back(std::move(rec));
  }
  return records;
}

void save_params(const fs::path& path, const ResistParams& params,
                 const ParamsProvenance* provenance) {
  json j = {{"A", params.exposure.A},
            {"B", params.exposure.B},
            {"c_eff", params.exposure.c_eff},
            {"thickness_nm", params.exposure.thickness_nm},
            {"nz", params.exposure.nz},
            {"n", params.mack.n},
            {"m_th", params.mack.m_th},
            {"r_max", params.mack.r_max},
            {"r_min", params.mack.r_min},
            {"t_dev", params.mack.t_dev},
            {"tau", params.tau},
            {"s", params.s}};
  json calib = json::array();
  for (int i = 0; i < kNumParams; ++i)
    if (params.calibratable[i]) calib.push_back(param_name(static_cast<Param>(i)));
  j["calibratable"] = std::move(calib);
  if (provenance) {
    j["provenance"] = {{"seed", provenance->seed},
                       {"dataset_hash", provenance->dataset_hash},
                       {"epochs", provenance->epochs}};
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

ResistParams load_params(const fs::path& path) {
  const json j = parse_json_file(path);
  reject_unknown_keys(j,
                      {"A", "B", "c_eff", "thickness_nm", "nz", "n", "m_th",
                       "r_max", "r_min", "t_dev", "tau", "s", "calibratable",
                       "provenance"},
                      path);
  ResistParams p = ResistParams::defaults();
  p.exposure.A = j.at("A").get<double>();
  p.exposure.B = j.at("B").get<double>();
  p.exposure.c_eff = j.at("c_eff").get<double>();
  p.exposure.thickness_nm = j.at("thickness_nm").get<double>();
  p.exposure.nz = j.at("nz").get<int>();
  p.mack.n = j.at("n").get<int>();
  p.mack.m_th = j.at("m_th").get<double>();
  p.mack.r_max = j.at("r_max").get<double>();
  p.mack.r_min = j.at("r_min").get<double>();
  p.mack.t_dev = j.at("t_dev").get<double>();
  p.tau = j.at("tau").get<double>();
  p.s = j.at("s").get<double>();
  if (j.contains("calibratable")) {
    p.calibratable.fill(false);
    for (const json& name : j.at("calibratable")) {
      bool found = false;
      for (int i = 0; i < kNumParams; ++i) {
        if (name.get<std::string>() == param_name(static_cast<Param>(i))) {
          p.calibratable[i] = true;
          found = true;
        }
      }
      if (!found)
        throw LoadError("unknown calibratable parameter '" +
                        name.get<std::string>() + "' in " + path.string());
    }
  }
  p.validate();
  return p;
}

std::string file_hash_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace resist::io
