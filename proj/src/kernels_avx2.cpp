#include "kernels_avx2.hpp"

#include <immintrin.h>

#include <cmath>

#include "occlab/numerics.hpp"

namespace occlab::kernels::avx2 {

namespace {

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

// v * 2^k for integer-valued k lanes in [-1076, 1024]; the two-step scale
// keeps the per-factor exponents in the normal range and lets denormal
// results form gracefully.
inline __m256d scale_by_pow2(__m256d v, __m128i k32) {
  __m128i k1 = _mm_srai_epi32(k32, 1);
  __m128i k2 = _mm_sub_epi32(k32, k1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  __m256i e1 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k1), bias), 52);
  __m256i e2 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k2), bias), 52);
  return _mm256_mul_pd(_mm256_mul_pd(v, _mm256_castsi256_pd(e1)), _mm256_castsi256_pd(e2));
}

// e^x via the Cephes rational approximation (range reduction against a split
// ln 2, then e^r = 1 + 2 r P(r^2) / (Q(r^2) - r P(r^2))). Inputs below the
// double range flush to zero.
inline __m256d exp_pd(__m256d x) {
  __m256d zero_mask = _mm256_cmp_pd(x, set1(-745.5), _CMP_LT_OQ);
  x = _mm256_min_pd(x, set1(709.7));
  x = _mm256_max_pd(x, set1(-746.0));
  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set1(kLog2E)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256d r = _mm256_fnmadd_pd(n, set1(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(n, set1(1.42860682030941723212e-6), r);
  __m256d r2 = _mm256_mul_pd(r, r);
  __m256d p = set1(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, r2, set1(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, r2, set1(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = set1(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, r2, set1(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, r2, set1(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, r2, set1(2.00000000000000000005e0));
  __m256d y = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  y = _mm256_fmadd_pd(set1(2.0), y, set1(1.0));
  y = scale_by_pow2(y, n32);
  return _mm256_andnot_pd(zero_mask, y);
}

// ln x for normalized positive inputs (the kernels only take ln of j >= 1).
// Cephes mantissa polynomial with the frexp-style exponent split.
inline __m256d log_pd(__m256d x) {
  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  __m256i mant = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                 _mm256_set1_epi64x(0x3FE0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant);
  __m256i packed = _mm256_permutevar8x32_epi32(expo, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0));
  __m256d e = _mm256_cvtepi32_pd(_mm256_castsi256_si128(packed));
  e = _mm256_sub_pd(e, set1(1022.0));

  __m256d below = _mm256_cmp_pd(m, set1(0.70710678118654752440), _CMP_LT_OQ);
  m = _mm256_blendv_pd(m, _mm256_add_pd(m, m), below);
  e = _mm256_sub_pd(e, _mm256_and_pd(below, set1(1.0)));

  __m256d y = _mm256_sub_pd(m, set1(1.0));
  __m256d z = _mm256_mul_pd(y, y);
  __m256d p = set1(1.01875663804580931796e-4);
  p = _mm256_fmadd_pd(p, y, set1(4.97494994976747001425e-1));
  p = _mm256_fmadd_pd(p, y, set1(4.70579119878881725854e0));
  p = _mm256_fmadd_pd(p, y, set1(1.44989225341610930846e1));
  p = _mm256_fmadd_pd(p, y, set1(1.79368678507819816313e1));
  p = _mm256_fmadd_pd(p, y, set1(7.70838733755885391666e0));
  __m256d q = _mm256_add_pd(y, set1(1.12873587189167450590e1));
  q = _mm256_fmadd_pd(q, y, set1(4.52279145837532221105e1));
  q = _mm256_fmadd_pd(q, y, set1(8.29875266912776603211e1));
  q = _mm256_fmadd_pd(q, y, set1(7.11544750618563894466e1));
  q = _mm256_fmadd_pd(q, y, set1(2.31251620126765340583e1));
  __m256d w = _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(y, z), p), q);
  w = _mm256_fnmadd_pd(e, set1(2.121944400546905827679e-4), w);
  w = _mm256_fnmadd_pd(set1(0.5), z, w);
  __m256d res = _mm256_add_pd(y, w);
  return _mm256_fmadd_pd(e, set1(0.693359375), res);
}

inline __m256d pow_int(__m256d x, int r) {
  __m256d p = set1(1.0), b = x;
  int e = r;
  while (e > 0) {
    if (e & 1) p = _mm256_mul_pd(p, b);
    b = _mm256_mul_pd(b, b);
    e >>= 1;
  }
  return p;
}

inline __m256d term_from_x(__m256d x, TermKind kind, int r, __m256d inv_rfact) {
  __m256d em = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), x));
  if (kind == TermKind::occupancy) return _mm256_sub_pd(set1(1.0), em);
  return _mm256_mul_pd(_mm256_mul_pd(em, pow_int(x, r)), inv_rfact);
}

template <typename LogArgFn, typename ScalarTail>
TermSums run(LogArgFn&& log_x_of, ScalarTail&& tail, TermKind kind, int r, std::uint64_t j0,
             std::uint64_t j1) {
  const __m256d inv_rfact = set1(1.0 / factorial(r));
  __m256d vsum = _mm256_setzero_pd();
  __m256d vsum2 = _mm256_setzero_pd();
  std::uint64_t j = j0;
  __m256d vj = _mm256_setr_pd(double(j0), double(j0) + 1, double(j0) + 2, double(j0) + 3);
  const __m256d four = set1(4.0);
  for (; j + 4 <= j1; j += 4) {
    __m256d x = exp_pd(log_x_of(vj));
    __m256d w = term_from_x(x, kind, r, inv_rfact);
    vsum = _mm256_add_pd(vsum, w);
    vsum2 = _mm256_fmadd_pd(w, w, vsum2);
    vj = _mm256_add_pd(vj, four);
  }
  alignas(32) double lane[4], lane2[4];
  _mm256_store_pd(lane, vsum);
  _mm256_store_pd(lane2, vsum2);
  KahanSum s, s2;
  for (int k = 0; k < 4; ++k) {
    s.add(lane[k]);
    s2.add(lane2[k]);
  }
  if (j < j1) {
    TermSums rest = tail(j, j1);
    s.add(rest.sum);
    s2.add(rest.sum_sq);
  }
  return {s.value(), s2.value()};
}

}  // namespace

TermSums accumulate(const LogArgGeometric& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  const __m256d base = set1(arg.base), step = set1(arg.step);
  return run([&](__m256d vj) { return _mm256_fmadd_pd(vj, step, base); },
             [&](std::uint64_t a, std::uint64_t b) { return scalar::accumulate(arg, kind, r, a, b); },
             kind, r, j0, j1);
}

TermSums accumulate(const LogArgPowerLaw& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  const __m256d base = set1(arg.base), expo = set1(arg.expo);
  return run([&](__m256d vj) { return _mm256_fnmadd_pd(expo, log_pd(vj), base); },
             [&](std::uint64_t a, std::uint64_t b) { return scalar::accumulate(arg, kind, r, a, b); },
             kind, r, j0, j1);
}

TermSums accumulate(const LogArgStretched& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  const __m256d base = set1(arg.base), beta = set1(arg.beta);
  return run(
      [&](__m256d vj) {
        __m256d jb = exp_pd(_mm256_mul_pd(beta, log_pd(vj)));  // j^beta
        return _mm256_sub_pd(base, jb);
      },
      [&](std::uint64_t a, std::uint64_t b) { return scalar::accumulate(arg, kind, r, a, b); },
      kind, r, j0, j1);
}

TermSums accumulate_array(std::span<const double> probs, double t, TermKind kind, int r) {
  const __m256d inv_rfact = set1(1.0 / factorial(r));
  const __m256d vt = set1(t);
  __m256d vsum = _mm256_setzero_pd();
  __m256d vsum2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= probs.size(); i += 4) {
    __m256d x = _mm256_mul_pd(vt, _mm256_loadu_pd(probs.data() + i));
    __m256d w = term_from_x(x, kind, r, inv_rfact);
    vsum = _mm256_add_pd(vsum, w);
    vsum2 = _mm256_fmadd_pd(w, w, vsum2);
  }
  alignas(32) double lane[4], lane2[4];
  _mm256_store_pd(lane, vsum);
  _mm256_store_pd(lane2, vsum2);
  KahanSum s, s2;
  for (int k = 0; k < 4; ++k) {
    s.add(lane[k]);
    s2.add(lane2[k]);
  }
  if (i < probs.size()) {
    TermSums rest = scalar::accumulate_array(probs.subspan(i), t, kind, r);
    s.add(rest.sum);
    s2.add(rest.sum_sq);
  }
  return {s.value(), s2.value()};
}

}  // namespace occlab::kernels::avx2
