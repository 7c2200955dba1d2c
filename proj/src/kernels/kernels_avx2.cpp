#include "resist/kernels/kernels.hpp"

// Compiled with -mavx2 -mfma on x86-64; elsewhere this TU only provides
// the null accessor.

namespace resist::kernels {
const Ops* avx2_ops_or_null();
}

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace resist::kernels {
namespace {

// ---- vectorized exp/log (Cephes rational approximations, ~1-2 ulp) ----
//
// Valid for inputs that stay clear of overflow/underflow: |x| <= ~700
// for exp4 (callers clamp), positive normal doubles for log4.

inline __m256d exp4(__m256d x) {
  const __m256d max_x = _mm256_set1_pd(700.0);
  const __m256d min_x = _mm256_set1_pd(-700.0);
  x = _mm256_min_pd(_mm256_max_pd(x, min_x), max_x);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

  __m256d n = _mm256_floor_pd(_mm256_fmadd_pd(log2e, x, _mm256_set1_pd(0.5)));
  // r = x - n*ln2, split into hi/lo parts
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000005e0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // scale by 2^n: build the exponent bits directly
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m256i nl = _mm256_cvtepi32_epi64(ni);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(nl, bias), 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(pow2));
}

inline __m256d log4(__m256d x) {
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i half_exp = _mm256_set1_epi64x(0x3FE0000000000000LL);

  __m256i bits = _mm256_castpd_si256(x);
  // biased exponent as double, via the 2^52 magic-number trick
  __m256i eb = _mm256_srli_epi64(bits, 52);
  eb = _mm256_or_si256(eb, _mm256_set1_epi64x(0x4330000000000000LL));
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(eb),
                            _mm256_set1_pd(4503599627370496.0 + 1022.0));

  // mantissa remapped to [0.5, 1)
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_exp));

  // if m < sqrt(1/2): e -= 1, m *= 2
  const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);
  const __m256d low = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(low, _mm256_set1_pd(1.0)));
  m = _mm256_add_pd(m, _mm256_and_pd(low, m));
  m = _mm256_sub_pd(m, _mm256_set1_pd(1.0));

  const __m256d z = _mm256_mul_pd(m, m);

  __m256d p = _mm256_set1_pd(1.01875663804580931796e-4);
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(4.97494994976747001425e-1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(4.70579119878881725854e0));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(1.44989225341610930846e1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(1.79368678507819816313e1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(7.70838733755885391666e0));

  __m256d q = _mm256_add_pd(m, _mm256_set1_pd(1.12873587189167450590e1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(4.52279145837532221105e1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(8.29875266912776603211e1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(7.11544750618563894466e1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(2.31251620126765340583e1));

  __m256d y = _mm256_mul_pd(m, _mm256_div_pd(_mm256_mul_pd(z, p), q));
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);

  __m256d out = _mm256_add_pd(m, y);
  out = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), out);
  return out;
}

void a_vexp(double* out, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

void a_vlog(double* out, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, log4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::log(x[i]);
}

void a_exp_scaled(double* out, const double* x, double scale, std::size_t n) {
  const __m256d c = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, exp4(_mm256_mul_pd(c, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) out[i] = std::exp(scale * x[i]);
}

inline __m256d pow_int4(__m256d x, int order) {
  __m256d acc = _mm256_set1_pd(1.0);
  __m256d base = x;
  for (int e = order; e > 0; e >>= 1) {
    if (e & 1) acc = _mm256_mul_pd(acc, base);
    base = _mm256_mul_pd(base, base);
  }
  return acc;
}

double pow_int(double x, int order) {
  double acc = 1.0, base = x;
  for (int e = order; e > 0; e >>= 1) {
    if (e & 1) acc *= base;
    base *= base;
  }
  return acc;
}

void a_mack_rate(double* out, const double* m, std::size_t n, double a,
                 int order, double r_max, double r_min) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d va = _mm256_set1_pd(a);
  const __m256d num_c = _mm256_set1_pd(r_max * (a + 1.0));
  const __m256d vrmin = _mm256_set1_pd(r_min);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d u = pow_int4(_mm256_sub_pd(one, _mm256_loadu_pd(m + i)),
                               order);
    const __m256d r = _mm256_add_pd(
        _mm256_div_pd(_mm256_mul_pd(num_c, u), _mm256_add_pd(va, u)), vrmin);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    const double u = pow_int(1.0 - m[i], order);
    out[i] = r_max * (a + 1.0) * u / (a + u) + r_min;
  }
}

void a_reciprocal(double* out, const double* x, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = 1.0 / x[i];
}

void a_advance_front(double* t_cum, double* depth, const double* invr_prev,
                     const double* invr_cur, double half_dz, double dz,
                     double z_prev, double t_dev, std::size_t n) {
  const __m256d vhdz = _mm256_set1_pd(half_dz);
  const __m256d vdz = _mm256_set1_pd(dz);
  const __m256d vzp = _mm256_set1_pd(z_prev);
  const __m256d vtd = _mm256_set1_pd(t_dev);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d tc = _mm256_loadu_pd(t_cum + i);
    const __m256d d = _mm256_loadu_pd(depth + i);
    const __m256d sum = _mm256_add_pd(_mm256_loadu_pd(invr_prev + i),
                                      _mm256_loadu_pd(invr_cur + i));
    const __m256d tn = _mm256_fmadd_pd(vhdz, sum, tc);
    const __m256d crossing = _mm256_and_pd(
        _mm256_cmp_pd(d, zero, _CMP_LT_OQ), _mm256_cmp_pd(tn, vtd, _CMP_GE_OQ));
    const __m256d frac =
        _mm256_div_pd(_mm256_sub_pd(vtd, tc), _mm256_sub_pd(tn, tc));
    const __m256d dnew = _mm256_fmadd_pd(vdz, frac, vzp);
    _mm256_storeu_pd(depth + i, _mm256_blendv_pd(d, dnew, crossing));
    _mm256_storeu_pd(t_cum + i, tn);
  }
  for (; i < n; ++i) {
    const double tn = t_cum[i] + half_dz * (invr_prev[i] + invr_cur[i]);
    if (depth[i] < 0.0 && tn >= t_dev)
      depth[i] = z_prev + dz * (t_dev - t_cum[i]) / (tn - t_cum[i]);
    t_cum[i] = tn;
  }
}

double a_bce_logistic(const double* depth, const std::uint8_t* wafer,
                      std::size_t n, double tau, double s, double eps) {
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d vs = _mm256_set1_pd(-s);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d lo = _mm256_set1_pd(eps);
  const __m256d hi = _mm256_set1_pd(1.0 - eps);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(depth + i);
    // p = sigmoid(s*(d-tau)) = 1/(1+exp(-s*(d-tau)))
    const __m256d ez = exp4(_mm256_mul_pd(vs, _mm256_sub_pd(d, vtau)));
    __m256d p = _mm256_div_pd(one, _mm256_add_pd(one, ez));
    p = _mm256_min_pd(_mm256_max_pd(p, lo), hi);
    const __m256d lp = log4(p);
    const __m256d l1p = log4(_mm256_sub_pd(one, p));
    const __m256d w = _mm256_set_pd(
        static_cast<double>(wafer[i + 3]), static_cast<double>(wafer[i + 2]),
        static_cast<double>(wafer[i + 1]), static_cast<double>(wafer[i]));
    // acc -= w*lp + (1-w)*l1p
    __m256d term = _mm256_fmadd_pd(w, lp,
                                   _mm256_mul_pd(_mm256_sub_pd(one, w), l1p));
    acc = _mm256_sub_pd(acc, term);
  }
  double lanes[4];
  _mm256_storeu_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    const double z = s * (depth[i] - tau);
    double p = 1.0 / (1.0 + std::exp(-z));
    p = std::clamp(p, eps, 1.0 - eps);
    sum -= wafer[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum;
}

const Ops avx2_table = {
    "avx2",        a_vexp,       a_vlog,          a_exp_scaled,
    a_mack_rate,   a_reciprocal, a_advance_front, a_bce_logistic,
};

}  // namespace

const Ops* avx2_ops_or_null() { return &avx2_table; }

}  // namespace resist::kernels

#else

namespace resist::kernels {
const Ops* avx2_ops_or_null() { return nullptr; }
}  // namespace resist::kernels

#endif
