#ifndef RESIST_IO_HPP
#define RESIST_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "resist/field.hpp"
#include "resist/gradcal.hpp"

namespace resist::io {

/// Error for anything wrong with on-disk data; always names the path.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Atomic write: the content goes to a temp file in the same directory
/// which is then renamed over the target.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// Canonical field format: <path>.raw (float32 little-endian, row-major)
/// plus <path>.json sidecar with dims, pitch and optional intensity
/// scale. `path` is the basename without extension.
void save_field_raw(const std::filesystem::path& base, const Field2D& field);
Field2D load_field_raw(const std::filesystem::path& base);

/// Volume variant of the raw format; sidecar adds nz and dz_nm.
void save_field3d_raw(const std::filesystem::path& base, const Field3D& field);
Field3D load_field3d_raw(const std::filesystem::path& base);

/// Grayscale PNG, 8 or 16 bit. Aerials loaded from PNG require a
/// <path>.json sidecar carrying pitch_nm and intensity_scale; pixel
/// values map linearly onto [0, intensity_scale].
void save_png_gray8(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& pixels, int width,
                    int height);
void save_png_gray16(const std::filesystem::path& path,
                     const std::vector<std::uint16_t>& pixels, int width,
                     int height);

/// Aerial loader: dispatches on extension (.png with sidecar, otherwise
/// raw float32 + sidecar).
Field2D load_aerial(const std::filesystem::path& path);
void save_aerial_png16(const std::filesystem::path& path, const Field2D& field,
                       double intensity_scale);

/// Wafer loader: PNG where any nonzero pixel is 1. Pitch comes from the
/// manifest, so it is a parameter here.
BinaryImage load_wafer(const std::filesystem::path& path, double pitch_nm);
void save_wafer_png(const std::filesystem::path& path, const BinaryImage& img);

/// Dataset manifest: tile list with per-tile aerial/wafer paths and the
/// calibration/test split. Paths are relative to the manifest location.
struct ManifestTile {
  std::string id;
  std::string aerial;
  std::string wafer;
  std::string wafer_hires;  // optional 1 nm reference wafer, may be empty
  Split split = Split::kCalibration;
};

struct DatasetManifest {
  std::filesystem::path root;
  double pitch_nm = 7.0;
  std::uint64_t seed = 0;
  std::vector<ManifestTile> tiles;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest);

/// Load every tile of a manifest into memory.
std::vector<CalibRecord> load_records(const DatasetManifest& manifest);

/// Resist parameter (de)serialization, with optional provenance fields.
struct ParamsProvenance {
  std::uint64_t seed = 0;
  std::string dataset_hash;
  int epochs = 0;
};
void save_params(const std::filesystem::path& path, const ResistParams& params,
                 const ParamsProvenance* provenance = nullptr);
ResistParams load_params(const std::filesystem::path& path);

/// FNV-1a hash of a file's bytes, hex encoded (dataset provenance).
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace resist::io

#endif
