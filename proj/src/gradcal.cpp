#include "resist/gradcal.hpp"

#include <vector>
#include <string>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "resist/kernels/kernels.hpp"

namespace resist {

namespace {
constexpr double kProbEps = 1e-7;
}

const char* param_name(Param p) {
  static const char* names[kNumParams] = {"B",     "c_eff", "m_th", "r_max",
                                          "r_min", "t_dev", "tau",  "s"};
  return names[static_cast<int>(p)];
}

ResistParams ResistParams::defaults() {
  ResistParams p;
  p.exposure = {0.0, 0.002, 1.0, 75.0, 26};
  p.mack = {5, 0.5, 15.0, 0.15, 10.0};
  p.tau = 0.5;
  p.s = 25.0;
  p.calibratable.fill(false);
  for (Param q : {Param::kCEff, Param::kMTh, Param::kRMax, Param::kRMin,
                  Param::kTDev, Param::kTau})
    p.calibratable[static_cast<int>(q)] = true;
  return p;
}

double ResistParams::get(Param p) const {
  switch (p) {
    case Param::kB: return exposure.B;
    case Param::kCEff: return exposure.c_eff;
    case Param::kMTh: return mack.m_th;
    case Param::kRMax: return mack.r_max;
    case Param::kRMin: return mack.r_min;
    case Param::kTDev: return mack.t_dev;
    case Param::kTau: return tau;
    case Param::kS: return s;
    default: throw std::invalid_argument("bad Param");
  }
}

void ResistParams::set(Param p, double v) {
  switch (p) {
    case Param::kB: exposure.B = v; break;
    case Param::kCEff: exposure.c_eff = v; break;
    case Param::kMTh: mack.m_th = v; break;
    case Param::kRMax: mack.r_max = v; break;
    case Param::kRMin: mack.r_min = v; break;
    case Param::kTDev: mack.t_dev = v; break;
    case Param::kTau: tau = v; break;
    case Param::kS: s = v; break;
    default: throw std::invalid_argument("bad Param");
  }
}

void ResistParams::clamp_to_domain() {
  exposure.B = std::max(exposure.B, 0.0);
  exposure.c_eff = std::max(exposure.c_eff, 1e-6);
  mack.m_th = std::clamp(mack.m_th, 1e-3, 1.0 - 1e-3);
  mack.r_max = std::max(mack.r_max, 1e-6);
  mack.r_min = std::clamp(mack.r_min, 0.0, 0.9 * mack.r_max);
  mack.t_dev = std::max(mack.t_dev, 1e-6);
  tau = std::clamp(tau, 1e-3, 1.0 - 1e-3);
  s = std::max(s, 1e-6);
}

void ResistParams::validate() const {
  exposure.validate();
  mack.validate();
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("ResistParams: tau must lie in (0,1)");
  if (s <= 0.0) throw std::invalid_argument("ResistParams: s must be > 0");
}

Field2D forward_depth(const Field2D& aerial, const ResistParams& params) {
  params.validate();
  if (params.exposure.A != 0.0)
    throw std::invalid_argument(
        "forward_depth: differentiable path requires A = 0");
  aerial.validate();
  for (double v : aerial.values)
    if (v < 0.0)
      throw std::invalid_argument("forward_depth: negative aerial intensity");

  // Fused slice-wise pipeline (closed-form exposure -> Mack rate ->
  // vertical development). Identical arithmetic to the staged modules,
  // but the working set stays at one lateral slice instead of three full
  // volumes, which matters at fine pitches where a volume no longer fits
  // in cache.
  const auto& k = kernels::active();
  const ExposureParams& e = params.exposure;
  const MackParams& mp = params.mack;
  const double a = inflection_a(mp.n, mp.m_th);
  const double dz = e.dz_nm();
  const double thickness = e.thickness_nm;
  const std::size_t npix = aerial.size();

  std::vector<double> m(npix), rate(npix), invr_prev(npix), invr_cur(npix);
  std::vector<double> t_cum(npix, 0.0), depth(npix, -1.0);
  for (int kz = 0; kz < e.nz; ++kz) {
    const double scale = -e.c_eff * std::exp(-e.B * kz * dz);
    k.exp_scaled(m.data(), aerial.values.data(), scale, npix);
    k.mack_rate(rate.data(), m.data(), npix, a, mp.n, mp.r_max, mp.r_min);
    for (double v : rate)
      if (v <= 0.0)
        throw std::invalid_argument("forward_depth: non-positive rate");
    k.reciprocal(invr_cur.data(), rate.data(), npix);
    if (kz > 0)
      k.advance_front(t_cum.data(), depth.data(), invr_prev.data(),
                      invr_cur.data(), 0.5 * dz, dz, (kz - 1) * dz, mp.t_dev,
                      npix);
    std::swap(invr_prev, invr_cur);
  }

  Field2D out = Field2D::zeros(aerial.width, aerial.height, aerial.pitch_nm);
  for (std::size_t i = 0; i < npix; ++i) {
    // columns whose front reaches the bottom before t_dev are fully cleared
    const double d = depth[i] < 0.0 ? thickness : depth[i];
    out.values[i] = std::clamp(d / thickness, 0.0, 1.0);
  }
  return out;
}

double soft_loss(const Field2D& depth, const BinaryImage& wafer, double tau,
                 double s) {
  depth.validate();
  wafer.validate();
  if (depth.width != wafer.width || depth.height != wafer.height)
    throw std::invalid_argument("soft_loss: shape mismatch");
  const double sum = kernels::active().bce_logistic(
      depth.values.data(), wafer.values.data(), depth.size(), tau, s,
      kProbEps);
  return sum / static_cast<double>(depth.size());
}

double loss_and_grad(const CalibRecord& record, const ResistParams& params,
                     GradVec& grad) {
  params.validate();
  if (params.exposure.A != 0.0)
    throw std::invalid_argument("loss_and_grad: requires A = 0");
  record.aerial.validate();
  record.wafer.validate();
  if (record.aerial.width != record.wafer.width ||
      record.aerial.height != record.wafer.height)
    throw std::invalid_argument("loss_and_grad: shape mismatch");

  const int nz = params.exposure.nz;
  const int n = params.mack.n;
  const double dz = params.exposure.dz_nm();
  const double thickness = params.exposure.thickness_nm;
  const double c_eff = params.exposure.c_eff;
  const double big_b = params.exposure.B;
  const double r_max = params.mack.r_max;
  const double r_min = params.mack.r_min;
  const double t_dev = params.mack.t_dev;
  const double tau = params.tau;
  const double s = params.s;
  const double a = inflection_a(n, params.mack.m_th);

  std::vector<double> zk(nz), ek(nz);
  for (int k = 0; k < nz; ++k) {
    zk[k] = k * dz;
    ek[k] = std::exp(-big_b * zk[k]);
  }

  // per-column scratch
  std::vector<double> m_col(nz), u_col(nz), r_col(nz), invr(nz), t_cum(nz);

  double loss_sum = 0.0;
  double g_tau = 0.0, g_s = 0.0, g_tdev = 0.0, g_ceff = 0.0, g_bb = 0.0;
  double g_rmax = 0.0, g_rmin = 0.0, g_a = 0.0;

  const std::size_t npix = record.aerial.size();
  for (std::size_t pix = 0; pix < npix; ++pix) {
    const double aerial_r = record.aerial.values[pix];
    const double wafer_w = record.wafer.values[pix];

    t_cum[0] = 0.0;
    for (int k = 0; k < nz; ++k) {
      const double m = std::exp(-c_eff * aerial_r * ek[k]);
      double u = 1.0, base = 1.0 - m;
      for (int e = n; e > 0; e >>= 1) {
        if (e & 1) u *= base;
        base *= base;
      }
      m_col[k] = m;
      u_col[k] = u;
      r_col[k] = r_max * (a + 1.0) * u / (a + u) + r_min;
      invr[k] = 1.0 / r_col[k];
      if (k > 0) t_cum[k] = t_cum[k - 1] + 0.5 * dz * (invr[k - 1] + invr[k]);
    }

    // crossing bracket: first k with t_cum[k] >= t_dev
    int kc = -1;
    for (int k = 1; k < nz; ++k) {
      if (t_cum[k] >= t_dev) {
        kc = k;
        break;
      }
    }
    const bool clamped = kc < 0;
    double depth_nm;
    double delta_t = 0.0;
    if (clamped) {
      depth_nm = thickness;
    } else {
      delta_t = t_cum[kc] - t_cum[kc - 1];
      depth_nm = zk[kc - 1] + dz * (t_dev - t_cum[kc - 1]) / delta_t;
    }
    const double d_hat = std::clamp(depth_nm / thickness, 0.0, 1.0);

    const double z = s * (d_hat - tau);
    double p = 1.0 / (1.0 + std::exp(-z));
    const bool p_clamped = p < kProbEps || p > 1.0 - kProbEps;
    p = std::clamp(p, kProbEps, 1.0 - kProbEps);
    loss_sum -= wafer_w > 0.5 ? std::log(p) : std::log(1.0 - p);

    const double g_z = p_clamped ? 0.0 : p - wafer_w;
    g_tau -= g_z * s;
    g_s += g_z * (d_hat - tau);
    if (clamped || g_z == 0.0) continue;  // flat depth: subgradient 0

    const double g_depth = g_z * s / thickness;  // d loss / d depth_nm
    g_tdev += g_depth * dz / delta_t;

    // adjoints of the two bracketing cumulative times
    const double g_t_lo = g_depth * dz * (t_dev - t_cum[kc]) / (delta_t * delta_t);
    const double g_t_hi = -g_depth * dz * (t_dev - t_cum[kc - 1]) / (delta_t * delta_t);

    // trapezoid weights: T_j = dz * sum_{i<=j} w(i,j)/r_i,
    // w = 1/2 at i=0 and i=j, else 1
    for (int i = 0; i <= kc; ++i) {
      double g_invr = 0.0;
      // T_0 is identically zero, so the lower bracket only carries
      // sensitivity when the crossing happens beyond the first slab
      if (kc > 1 && i <= kc - 1)
        g_invr += g_t_lo * dz * ((i == 0 || i == kc - 1) ? 0.5 : 1.0);
      g_invr += g_t_hi * dz * ((i == 0 || i == kc) ? 0.5 : 1.0);
      if (g_invr == 0.0) continue;

      const double g_r = -g_invr * invr[i] * invr[i];
      const double u = u_col[i];
      const double den = a + u;
      g_rmax += g_r * (a + 1.0) * u / den;
      g_rmin += g_r;
      g_a += g_r * r_max * u * (u - 1.0) / (den * den);

      const double g_u = g_r * r_max * (a + 1.0) * a / (den * den);
      const double one_m = 1.0 - m_col[i];
      double pw = 1.0;  // (1-m)^(n-1)
      for (int e = 0; e < n - 1; ++e) pw *= one_m;
      const double g_m = -g_u * n * pw;

      const double m = m_col[i];
      g_ceff += g_m * m * (-aerial_r * ek[i]);
      g_bb += g_m * m * c_eff * aerial_r * ek[i] * zk[i];
    }
  }

  const double inv_n = 1.0 / static_cast<double>(npix);
  const double da_dmth =
      -n * (n + 1.0) / (n - 1.0) * std::pow(1.0 - params.mack.m_th, n - 1);

  GradVec full{};
  full[static_cast<int>(Param::kB)] = g_bb * inv_n;
  full[static_cast<int>(Param::kCEff)] = g_ceff * inv_n;
  full[static_cast<int>(Param::kMTh)] = g_a * da_dmth * inv_n;
  full[static_cast<int>(Param::kRMax)] = g_rmax * inv_n;
  full[static_cast<int>(Param::kRMin)] = g_rmin * inv_n;
  full[static_cast<int>(Param::kTDev)] = g_tdev * inv_n;
  full[static_cast<int>(Param::kTau)] = g_tau * inv_n;
  full[static_cast<int>(Param::kS)] = g_s * inv_n;

  for (int i = 0; i < kNumParams; ++i)
    grad[i] = params.calibratable[i] ? full[i] : 0.0;
  return loss_sum * inv_n;
}

GradVec grad_params(const CalibRecord& record, const ResistParams& params) {
  GradVec g{};
  loss_and_grad(record, params, g);
  return g;
}

void adam_step(ResistParams& params, const GradVec& grad, AdamState& state,
               const AdamConfig& cfg, double lr) {
  for (int i = 0; i < kNumParams; ++i) {
    if (!std::isfinite(grad[i]))
      throw std::runtime_error(std::string("adam_step: non-finite gradient for ") +
                               param_name(static_cast<Param>(i)));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (int i = 0; i < kNumParams; ++i) {
    if (!params.calibratable[i]) continue;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    const Param p = static_cast<Param>(i);
    params.set(p, params.get(p) - lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
  params.clamp_to_domain();
}

namespace {

double dataset_loss(std::span<const CalibRecord* const> records,
                    const ResistParams& params) {
  double sum = 0.0;
  for (const CalibRecord* rec : records) {
    const Field2D depth = forward_depth(rec->aerial, params);
    sum += soft_loss(depth, rec->wafer, params.tau, params.s);
  }
  return sum / static_cast<double>(records.size());
}

}  // namespace

ResistParams calibrate(std::span<const CalibRecord> dataset,
                       const ResistParams& init, const AdamConfig& cfg,
                       std::vector<LossTraceEntry>* trace) {
  init.validate();
  std::vector<const CalibRecord*> calib;
  for (const CalibRecord& r : dataset)
    if (r.split == Split::kCalibration) calib.push_back(&r);
  if (calib.empty())
    throw std::invalid_argument("calibrate: empty calibration split");
  if (std::none_of(init.calibratable.begin(), init.calibratable.end(),
                   [](bool b) { return b; }))
    throw std::invalid_argument("calibrate: no calibratable parameter");

  ResistParams params = init;
  AdamState state;
  std::mt19937_64 rng(cfg.seed);

  ResistParams best = init;
  double best_loss = dataset_loss(calib, init);

  std::vector<std::size_t> order(calib.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr0 * std::pow(cfg.decay, epoch / cfg.decay_every);
    // seeded Fisher-Yates shuffle
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = rng() % i;
      std::swap(order[i - 1], order[j]);
    }
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      GradVec batch_grad{};
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        GradVec g{};
        batch_loss += loss_and_grad(*calib[order[i]], params, g);
        for (int k = 0; k < kNumParams; ++k) batch_grad[k] += g[k];
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      batch_loss *= inv;
      for (int k = 0; k < kNumParams; ++k) batch_grad[k] *= inv;
      if (trace) trace->push_back({epoch + 1, batch_index, batch_loss, lr});
      adam_step(params, batch_grad, state, cfg, lr);
    }
    const double epoch_loss = dataset_loss(calib, params);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = params;
    }
  }
  return best;
}

}  // namespace resist
