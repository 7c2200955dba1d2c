#ifndef RESIST_CONFIG_HPP
#define RESIST_CONFIG_HPP

#include <filesystem>
#include <string>

#include "resist/gradcal.hpp"
#include "resist/synth.hpp"

namespace resist {

enum class Solver { kVertical, kFmm };

/// Run configuration (nested JSON, unknown keys rejected). Everything
/// has a usable default so the CLI works without a config file.
struct RunConfig {
  ResistParams params = ResistParams::defaults();
  Solver solver = Solver::kVertical;
  AdamConfig optimizer;
  double output_resolution_nm = 1.0;
  std::uint64_t seed = 42;
  std::string kernels = "auto";
  SynthConfig synth;
};

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace resist

#endif
