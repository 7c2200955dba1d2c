#include "resist/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace resist::kernels {
namespace {

void s_vexp(double* out, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void s_vlog(double* out, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(x[i]);
}

void s_exp_scaled(double* out, const double* x, double scale, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(scale * x[i]);
}

double pow_int(double x, int order) {
  double acc = 1.0;
  double base = x;
  for (int e = order; e > 0; e >>= 1) {
    if (e & 1) acc *= base;
    base *= base;
  }
  return acc;
}

void s_mack_rate(double* out, const double* m, std::size_t n, double a,
                 int order, double r_max, double r_min) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = pow_int(1.0 - m[i], order);
    out[i] = r_max * (a + 1.0) * u / (a + u) + r_min;
  }
}

void s_reciprocal(double* out, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / x[i];
}

void s_advance_front(double* t_cum, double* depth, const double* invr_prev,
                     const double* invr_cur, double half_dz, double dz,
                     double z_prev, double t_dev, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t_new = t_cum[i] + half_dz * (invr_prev[i] + invr_cur[i]);
    if (depth[i] < 0.0 && t_new >= t_dev) {
      depth[i] = z_prev + dz * (t_dev - t_cum[i]) / (t_new - t_cum[i]);
    }
    t_cum[i] = t_new;
  }
}

double s_bce_logistic(const double* depth, const std::uint8_t* wafer,
                      std::size_t n, double tau, double s, double eps) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = s * (depth[i] - tau);
    double p = 1.0 / (1.0 + std::exp(-z));
    p = std::clamp(p, eps, 1.0 - eps);
    sum -= wafer[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",       s_vexp,       s_vlog,          s_exp_scaled,
      s_mack_rate,    s_reciprocal, s_advance_front, s_bce_logistic,
  };
  return ops;
}

}  // namespace resist::kernels
