#include "resist/config.hpp"

#include <fstream>
#include <json.hpp>

#include "resist/io.hpp"

namespace resist {

using nlohmann::json;

namespace {

json parse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::LoadError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw io::LoadError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::filesystem::path& path, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) known = true;
    if (!known)
      throw io::LoadError("unknown key '" + it.key() + "' in " + where +
                          std::string(" of ") + path.string());
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  const json j = parse(path);
  reject_unknown(j,
                 {"params", "solver", "optimizer", "output_resolution_nm",
                  "seed", "kernels", "synth"},
                 path, "top level");
  RunConfig cfg;

  if (j.contains("params")) {
    const json& p = j.at("params");
    reject_unknown(p,
                   {"A", "B", "c_eff", "thickness_nm", "nz", "n", "m_th",
                    "r_max", "r_min", "t_dev", "tau", "s", "calibratable"},
                   path, "params");
    maybe(p, "A", cfg.params.exposure.A);
    maybe(p, "B", cfg.params.exposure.B);
    maybe(p, "c_eff", cfg.params.exposure.c_eff);
    maybe(p, "thickness_nm", cfg.params.exposure.thickness_nm);
    maybe(p, "nz", cfg.params.exposure.nz);
    maybe(p, "n", cfg.params.mack.n);
    maybe(p, "m_th", cfg.params.mack.m_th);
    maybe(p, "r_max", cfg.params.mack.r_max);
    maybe(p, "r_min", cfg.params.mack.r_min);
    maybe(p, "t_dev", cfg.params.mack.t_dev);
    maybe(p, "tau", cfg.params.tau);
    maybe(p, "s", cfg.params.s);
    if (p.contains("calibratable")) {
      cfg.params.calibratable.fill(false);
      for (const json& name : p.at("calibratable")) {
        bool found = false;
        for (int i = 0; i < kNumParams; ++i) {
          if (name.get<std::string>() == param_name(static_cast<Param>(i))) {
            cfg.params.calibratable[i] = true;
            found = true;
          }
        }
        if (!found)
          throw io::LoadError("unknown calibratable parameter '" +
                              name.get<std::string>() + "' in " +
                              path.string());
      }
    }
    cfg.params.validate();
  }

  if (j.contains("solver")) {
    const std::string s = j.at("solver").get<std::string>();
    if (s == "vertical") {
      cfg.solver = Solver::kVertical;
    } else if (s == "fmm") {
      cfg.solver = Solver::kFmm;
    } else {
      throw io::LoadError("unknown solver '" + s + "' in " + path.string());
    }
  }

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    reject_unknown(o,
                   {"lr0", "beta1", "beta2", "eps", "decay", "decay_every",
                    "epochs", "batch_size"},
                   path, "optimizer");
    maybe(o, "lr0", cfg.optimizer.lr0);
    maybe(o, "beta1", cfg.optimizer.beta1);
    maybe(o, "beta2", cfg.optimizer.beta2);
    maybe(o, "eps", cfg.optimizer.eps);
    maybe(o, "decay", cfg.optimizer.decay);
    maybe(o, "decay_every", cfg.optimizer.decay_every);
    maybe(o, "epochs", cfg.optimizer.epochs);
    maybe(o, "batch_size", cfg.optimizer.batch_size);
  }

  maybe(j, "output_resolution_nm", cfg.output_resolution_nm);
  maybe(j, "seed", cfg.seed);
  maybe(j, "kernels", cfg.kernels);
  if (cfg.kernels != "auto" && cfg.kernels != "scalar" && cfg.kernels != "avx2")
    throw io::LoadError("unknown kernels backend in " + path.string());

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    reject_unknown(s,
                   {"count", "tile_px", "pitch_nm", "blur_sigma_nm",
                    "calib_fraction", "min_rects", "max_rects",
                    "min_feature_nm", "max_feature_nm",
                    "emit_hires_reference"},
                   path, "synth");
    maybe(s, "count", cfg.synth.count);
    maybe(s, "tile_px", cfg.synth.tile_px);
    maybe(s, "pitch_nm", cfg.synth.pitch_nm);
    maybe(s, "blur_sigma_nm", cfg.synth.blur_sigma_nm);
    maybe(s, "calib_fraction", cfg.synth.calib_fraction);
    maybe(s, "min_rects", cfg.synth.min_rects);
    maybe(s, "max_rects", cfg.synth.max_rects);
    maybe(s, "min_feature_nm", cfg.synth.min_feature_nm);
    maybe(s, "max_feature_nm", cfg.synth.max_feature_nm);
    maybe(s, "emit_hires_reference", cfg.synth.emit_hires_reference);
  }
  cfg.synth.seed = cfg.seed;
  cfg.synth.theta_star = cfg.params;
  return cfg;
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  json calib = json::array();
  for (int i = 0; i < kNumParams; ++i)
    if (cfg.params.calibratable[i])
      calib.push_back(param_name(static_cast<Param>(i)));
  const json j = {
      {"params",
       {{"A", cfg.params.exposure.A},
        {"B", cfg.params.exposure.B},
        {"c_eff", cfg.params.exposure.c_eff},
        {"thickness_nm", cfg.params.exposure.thickness_nm},
        {"nz", cfg.params.exposure.nz},
        {"n", cfg.params.mack.n},
        {"m_th", cfg.params.mack.m_th},
        {"r_max", cfg.params.mack.r_max},
        {"r_min", cfg.params.mack.r_min},
        {"t_dev", cfg.params.mack.t_dev},
        {"tau", cfg.params.tau},
        {"s", cfg.params.s},
        {"calibratable", calib}}},
      {"solver", cfg.solver == Solver::kVertical ? "vertical" : "fmm"},
      {"optimizer",
       {{"lr0", cfg.optimizer.lr0},
        {"beta1", cfg.optimizer.beta1},
        {"beta2", cfg.optimizer.beta2},
        {"eps", cfg.optimizer.eps},
        {"decay", cfg.optimizer.decay},
        {"decay_every", cfg.optimizer.decay_every},
        {"epochs", cfg.optimizer.epochs},
        {"batch_size", cfg.optimizer.batch_size}}},
      {"output_resolution_nm", cfg.output_resolution_nm},
      {"seed", cfg.seed},
      {"kernels", cfg.kernels},
      {"synth",
       {{"count", cfg.synth.count},
        {"tile_px", cfg.synth.tile_px},
        {"pitch_nm", cfg.synth.pitch_nm},
        {"blur_sigma_nm", cfg.synth.blur_sigma_nm},
        {"calib_fraction", cfg.synth.calib_fraction},
        {"min_rects", cfg.synth.min_rects},
        {"max_rects", cfg.synth.max_rects},
        {"min_feature_nm", cfg.synth.min_feature_nm},
        {"max_feature_nm", cfg.synth.max_feature_nm},
        {"emit_hires_reference", cfg.synth.emit_hires_reference}}}};
  io::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace resist
