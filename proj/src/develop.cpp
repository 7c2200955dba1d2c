#include "resist/develop.hpp"

#include <utility>
#include <queue>
#include <limits>
#include <cstdint>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "resist/kernels/kernels.hpp"

namespace resist {

void MackParams::validate() const {
  if (n < 2) throw std::invalid_argument("MackParams: n must be >= 2");
  if (!(m_th > 0.0 && m_th < 1.0))
    throw std::invalid_argument("MackParams: m_th must lie in (0,1)");
  if (r_max <= 0.0 || r_min < 0.0 || t_dev <= 0.0)
    throw std::invalid_argument("MackParams: invalid rate or time");
}

double inflection_a(int n, double m_th) {
  if (n < 2) throw std::invalid_argument("inflection_a: n must be >= 2");
  if (!(m_th > 0.0 && m_th < 1.0))
    throw std::invalid_argument("inflection_a: m_th must lie in (0,1)");
  return (n + 1.0) / (n - 1.0) * std::pow(1.0 - m_th, n);
}

Field3D mack_rate(const Field3D& inhibitor, const MackParams& p) {
  inhibitor.validate();
  p.validate();
  constexpr double kTol = 1e-9;
  for (double v : inhibitor.values)
    if (v < -kTol || v > 1.0 + kTol)
      throw std::invalid_argument("mack_rate: inhibitor outside [0,1]");

  Field3D clamped = inhibitor;
  for (double& v : clamped.values) v = std::clamp(v, 0.0, 1.0);

  const double a = inflection_a(p.n, p.m_th);
  Field3D rate = Field3D::zeros(inhibitor.nz, inhibitor.width, inhibitor.height,
                                inhibitor.pitch_nm, inhibitor.dz_nm);
  kernels::active().mack_rate(rate.values.data(), clamped.values.data(),
                              clamped.values.size(), a, p.n, p.r_max, p.r_min);
  return rate;
}

Field2D develop_vertical(const Field3D& rate, double t_dev) {
  rate.validate();
  if (t_dev <= 0.0) throw std::invalid_argument("develop_vertical: t_dev <= 0");
  for (double v : rate.values)
    if (v <= 0.0)
      throw std::invalid_argument("develop_vertical: non-positive rate");

  const auto& k = kernels::active();
  const std::size_t npix = rate.slice_size();
  const double dz = rate.dz_nm;
  const double thickness = rate.thickness_nm();

  std::vector<double> invr_prev(npix), invr_cur(npix);
  std::vector<double> t_cum(npix, 0.0);
  std::vector<double> depth(npix, -1.0);  // -1 marks "not yet crossed"

  k.reciprocal(invr_prev.data(), rate.slice(0).data(), npix);
  for (int kz = 1; kz < rate.nz; ++kz) {
    k.reciprocal(invr_cur.data(), rate.slice(kz).data(), npix);
    k.advance_front(t_cum.data(), depth.data(), invr_prev.data(),
                    invr_cur.data(), 0.5 * dz, dz, (kz - 1) * dz, t_dev, npix);
    std::swap(invr_prev, invr_cur);
  }

  Field2D out = Field2D::zeros(rate.width, rate.height, rate.pitch_nm);
  for (std::size_t i = 0; i < npix; ++i) {
    // columns that never reached t_dev are fully cleared
    const double d = depth[i] < 0.0 ? thickness : depth[i];
    out.values[i] = std::clamp(d / thickness, 0.0, 1.0);
  }
  return out;
}

Field2D envelope_depth(const Field3D& arrival, double t_dev) {
  arrival.validate();
  if (t_dev <= 0.0) throw std::invalid_argument("envelope_depth: t_dev <= 0");
  const double dz = arrival.dz_nm;
  const double thickness = arrival.thickness_nm();
  Field2D out = Field2D::zeros(arrival.width, arrival.height, arrival.pitch_nm);
  for (int y = 0; y < arrival.height; ++y) {
    for (int x = 0; x < arrival.width; ++x) {
      int deepest = -1;
      for (int z = 0; z < arrival.nz; ++z)
        if (arrival.at(z, x, y) <= t_dev) deepest = z;
      double d = 0.0;
      if (deepest == arrival.nz - 1) {
        d = thickness;
      } else if (deepest >= 0) {
        const double t0 = arrival.at(deepest, x, y);
        const double t1 = arrival.at(deepest + 1, x, y);
        const double frac = t1 > t0 ? (t_dev - t0) / (t1 - t0) : 0.0;
        d = (deepest + std::clamp(frac, 0.0, 1.0)) * dz;
      }
      out.at(x, y) = std::clamp(d / thickness, 0.0, 1.0);
    }
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// First-order upwind Eikonal update at one node given per-axis upwind
// values and spacings: solve sum_i ((t - a_i)/h_i)^2 = rhs^2 over the
// admissible subset (t must exceed every contributing a_i).
double eikonal_update(const double* a, const double* h, int count,
                      double inv_speed) {
  // candidate axes sorted by upwind value
  struct Cand {
    double a, h;
  };
  Cand c[3];
  int m = 0;
  for (int i = 0; i < count; ++i)
    if (a[i] < kInf) c[m++] = {a[i], h[i]};
  if (m == 0) return kInf;
  std::sort(c, c + m, [](const Cand& l, const Cand& r) { return l.a < r.a; });

  // grow the active set while the solution stays admissible
  double best = c[0].a + inv_speed * c[0].h;
  for (int used = 2; used <= m; ++used) {
    if (best <= c[used - 1].a) break;
    double sa = 0.0, sb = 0.0, sc = -inv_speed * inv_speed;
    for (int i = 0; i < used; ++i) {
      const double w = 1.0 / (c[i].h * c[i].h);
      sa += w;
      sb += -2.0 * w * c[i].a;
      sc += w * c[i].a * c[i].a;
    }
    const double disc = sb * sb - 4.0 * sa * sc;
    if (disc < 0.0) break;  // no admissible root, keep lower-dim solution
    const double t = (-sb + std::sqrt(disc)) / (2.0 * sa);
    if (t < c[used - 1].a) break;
    best = t;
  }
  return best;
}

Field3D fmm_solve(const Field3D& rate, const std::vector<GridIndex>& seeds) {
  rate.validate();
  for (double v : rate.values)
    if (v <= 0.0) throw std::invalid_argument("fmm: non-positive rate");

  const int nz = rate.nz, w = rate.width, h = rate.height;
  const auto idx = [w, h](int z, int x, int y) {
    return (static_cast<std::size_t>(z) * h + y) * w + x;
  };
  const std::size_t total = rate.values.size();

  Field3D arrival = Field3D::zeros(nz, w, h, rate.pitch_nm, rate.dz_nm);
  std::vector<double>& t = arrival.values;
  std::fill(t.begin(), t.end(), kInf);
  std::vector<std::uint8_t> accepted(total, 0);

  using HeapItem = std::pair<double, std::size_t>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;

  for (const GridIndex& s : seeds) {
    if (s.z < 0 || s.z >= nz || s.x < 0 || s.x >= w || s.y < 0 || s.y >= h)
      throw std::invalid_argument("fmm: seed outside grid");
    t[idx(s.z, s.x, s.y)] = 0.0;
    heap.emplace(0.0, idx(s.z, s.x, s.y));
  }

  const double hz = rate.dz_nm, hx = rate.pitch_nm, hy = rate.pitch_nm;

  while (!heap.empty()) {
    const auto [tv, i] = heap.top();
    heap.pop();
    if (accepted[i] || tv > t[i]) continue;  // stale entry
    accepted[i] = 1;

    const int z = static_cast<int>(i / (static_cast<std::size_t>(w) * h));
    const std::size_t rem = i - static_cast<std::size_t>(z) * w * h;
    const int y = static_cast<int>(rem / w);
    const int x = static_cast<int>(rem % w);

    const int dzs[6] = {-1, 1, 0, 0, 0, 0};
    const int dxs[6] = {0, 0, -1, 1, 0, 0};
    const int dys[6] = {0, 0, 0, 0, -1, 1};
    for (int nb = 0; nb < 6; ++nb) {
      const int zn = z + dzs[nb], xn = x + dxs[nb], yn = y + dys[nb];
      if (zn < 0 || zn >= nz || xn < 0 || xn >= w || yn < 0 || yn >= h)
        continue;
      const std::size_t j = idx(zn, xn, yn);
      if (accepted[j]) continue;

      // per-axis upwind values at the neighbor
      double a[3] = {kInf, kInf, kInf};
      const double hs[3] = {hz, hx, hy};
      if (zn > 0 && accepted[idx(zn - 1, xn, yn)])
        a[0] = t[idx(zn - 1, xn, yn)];
      if (zn + 1 < nz && accepted[idx(zn + 1, xn, yn)])
        a[0] = std::min(a[0], t[idx(zn + 1, xn, yn)]);
      if (xn > 0 && accepted[idx(zn, xn - 1, yn)])
        a[1] = t[idx(zn, xn - 1, yn)];
      if (xn + 1 < w && accepted[idx(zn, xn + 1, yn)])
        a[1] = std::min(a[1], t[idx(zn, xn + 1, yn)]);
      if (yn > 0 && accepted[idx(zn, xn, yn - 1)])
        a[2] = t[idx(zn, xn, yn - 1)];
      if (yn + 1 < h && accepted[idx(zn, xn, yn + 1)])
        a[2] = std::min(a[2], t[idx(zn, xn, yn + 1)]);

      const double cand = eikonal_update(a, hs, 3, 1.0 / rate.values[j]);
      if (cand < t[j]) {
        t[j] = cand;
        heap.emplace(cand, j);
      }
    }
  }
  return arrival;
}

}  // namespace

Field3D fmm_arrival_from_seeds(const Field3D& rate,
                               const std::vector<GridIndex>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("fmm: no seeds");
  return fmm_solve(rate, seeds);
}

FmmResult develop_fmm(const Field3D& rate, double t_dev) {
  if (t_dev <= 0.0) throw std::invalid_argument("develop_fmm: t_dev <= 0");
  std::vector<GridIndex> seeds;
  seeds.reserve(rate.slice_size());
  for (int y = 0; y < rate.height; ++y)
    for (int x = 0; x < rate.width; ++x) seeds.push_back({0, x, y});
  Field3D arrival = fmm_solve(rate, seeds);
  Field2D depth = envelope_depth(arrival, t_dev);
  return {std::move(arrival), std::move(depth)};
}

}  // namespace resist
