#ifndef RESIST_KERNELS_KERNELS_HPP
#define RESIST_KERNELS_KERNELS_HPP

#include <cstddef>
#include <cstdint>
#include <string_view>

// Inner-loop kernels shared by the exposure/develop/loss pipelines.
// Every kernel exists as a scalar reference implementation and, on x86
// machines with AVX2+FMA, as a vectorized variant. The active table is
// chosen once at startup (or forced via force_backend / the
// RESIST_KERNELS environment variable) and the two variants are
// equivalence-tested against each other.
namespace resist::kernels {

struct Ops {
  const char* name;

  // out[i] = exp(x[i])
  void (*vexp)(double* out, const double* x, std::size_t n);

  // out[i] = log(x[i]), x > 0
  void (*vlog)(double* out, const double* x, std::size_t n);

  // out[i] = exp(scale * x[i])
  void (*exp_scaled)(double* out, const double* x, double scale,
                     std::size_t n);

  // Mack rate: u = (1-m)^order, out = r_max*(a+1)*u/(a+u) + r_min.
  void (*mack_rate)(double* out, const double* m, std::size_t n, double a,
                    int order, double r_max, double r_min);

  // out[i] = 1 / x[i]
  void (*reciprocal)(double* out, const double* x, std::size_t n);

  // One trapezoid step of the vertical development scan over a z-slab.
  // For each pixel: t_new = t_cum + half_dz*(invr_prev + invr_cur);
  // if the column has not crossed yet (depth < 0) and t_new >= t_dev,
  // record the interpolated crossing depth z_prev + dz*(t_dev-t_cum)/
  // (t_new-t_cum). Finally t_cum = t_new.
  void (*advance_front)(double* t_cum, double* depth, const double* invr_prev,
                        const double* invr_cur, double half_dz, double dz,
                        double z_prev, double t_dev, std::size_t n);

  // Sum over pixels of BCE(clamp(sigmoid(s*(depth-tau))), wafer) with
  // probabilities clamped to [eps, 1-eps].
  double (*bce_logistic)(const double* depth, const std::uint8_t* wafer,
                         std::size_t n, double tau, double s, double eps);
};

const Ops& scalar_ops();
bool avx2_available();
const Ops& avx2_ops();  // valid only if avx2_available()

// Currently active table. Auto-detects on first use; RESIST_KERNELS
// may be set to "scalar" or "avx2" to override.
const Ops& active();
void force_backend(std::string_view name);  // "scalar", "avx2" or "auto"

}  // namespace resist::kernels

#endif
