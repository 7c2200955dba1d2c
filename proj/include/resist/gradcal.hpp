#ifndef RESIST_GRADCAL_HPP
#define RESIST_GRADCAL_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "resist/develop.hpp"
#include "resist/exposure.hpp"
#include "resist/field.hpp"

namespace resist {

/// The calibratable parameters of the end-to-end model, in a fixed
/// order so gradients and optimizer state can be indexed uniformly.
enum class Param : int {
  kB = 0,
  kCEff,
  kMTh,
  kRMax,
  kRMin,
  kTDev,
  kTau,
  kS,
  kCount
};
inline constexpr int kNumParams = static_cast<int>(Param::kCount);
const char* param_name(Param p);

using GradVec = std::array<double, kNumParams>;

/// Full model parameter set: exposure + development constants, the
/// binarization threshold tau and the sigmoid sharpness s, plus the
/// per-parameter calibration mask. A, thickness, nz, n and s are frozen
/// by default; B is frozen too (set from the absorption config) but may
/// be unfrozen.
struct ResistParams {
  ExposureParams exposure;
  MackParams mack;
  double tau = 0.5;
  double s = 25.0;
  std::array<bool, kNumParams> calibratable{};

  static ResistParams defaults();

  double get(Param p) const;
  void set(Param p, double v);
  /// Re-project every parameter into its valid domain by clamping.
  void clamp_to_domain();
  void validate() const;
};

/// One aerial/wafer training pair.
enum class Split { kCalibration, kTest };
struct CalibRecord {
  Field2D aerial;
  BinaryImage wafer;
  Split split = Split::kCalibration;
};

/// Differentiable forward model (closed-form exposure, Mack rate,
/// vertical development): normalized developed depth in [0,1].
Field2D forward_depth(const Field2D& aerial, const ResistParams& params);

/// Mean binary cross-entropy of sigmoid(s*(depth-tau)) against the
/// wafer, probabilities clamped to [1e-7, 1-1e-7].
double soft_loss(const Field2D& depth, const BinaryImage& wafer, double tau,
                 double s);

/// Loss plus the exact adjoint gradient with respect to every
/// calibratable parameter (frozen entries are zero).
double loss_and_grad(const CalibRecord& record, const ResistParams& params,
                     GradVec& grad);
GradVec grad_params(const CalibRecord& record, const ResistParams& params);

/// Adam optimizer configuration and state (bias-corrected moments).
struct AdamConfig {
  double lr0 = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 0.3;  // learning-rate factor applied every decay_every epochs
  int decay_every = 3;
  int epochs = 9;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

struct AdamState {
  GradVec m{};  // first moments
  GradVec v{};  // second moments
  long step = 0;
};

/// One bias-corrected Adam update followed by re-projection of the
/// parameters onto their valid domains. Throws on non-finite gradients.
void adam_step(ResistParams& params, const GradVec& grad, AdamState& state,
               const AdamConfig& cfg, double lr);

struct LossTraceEntry {
  int epoch;
  int batch;
  double loss;
  double lr;
};

/// Seeded mini-batch Adam over the calibration split; returns the
/// parameter snapshot with the lowest epoch loss.
ResistParams calibrate(std::span<const CalibRecord> dataset,
                       const ResistParams& init, const AdamConfig& cfg,
                       std::vector<LossTraceEntry>* trace = nullptr);

}  // namespace resist

#endif
