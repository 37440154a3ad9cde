// SPDX-License-Identifier: Apache-2.0
//
// AVX2 kernel variants. Compiled with -mavx2 -mfma; only reached when
// cpu_supports_avx2() said yes. Integer kernels are bit-exact with the scalar
// references. The entropy kernel computes log2 with a [1/sqrt2, sqrt2) range
// reduction and an odd atanh series, which is exactly zero at mantissa 1 so
// log2 of a power of two is exact (the confidence endpoints depend on that).

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "care/kernels.hpp"

namespace care::kernels::avx2 {

namespace {

// log2(x) for finite x in (0, 1), 4 lanes. Exact when x is a power of two.
inline __m256d log2_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_raw = _mm256_srli_epi64(bits, 52);
  // Exponent as double via the small-integer trick (values fit in 11 bits).
  const __m256i exp_biased =
      _mm256_and_si256(exp_raw, _mm256_set1_epi64x(0x7FF));
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);  // 2^52
  const __m256d exp_d = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(exp_biased, magic)),
      _mm256_set1_pd(4503599627370496.0 + 1023.0));
  // Mantissa in [1, 2).
  const __m256i mant_bits = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);
  __m256d e = exp_d;
  // Fold [sqrt2, 2) down to [sqrt2/2, 1) so |z| stays small.
  const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730951);
  const __m256d fold = _mm256_cmp_pd(m, sqrt2, _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), fold);
  e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), fold);
  // atanh series: log(m) = 2z * sum_k z^(2k) / (2k+1), z = (m-1)/(m+1).
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d z =
      _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d w = _mm256_mul_pd(z, z);
  __m256d s = _mm256_set1_pd(1.0 / 23.0);
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 21.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 19.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 17.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 15.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 13.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 11.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 9.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 7.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 5.0));
  s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / 3.0));
  s = _mm256_fmadd_pd(s, w, one);
  // log2(m) = 2*z*s / ln2; the product keeps z=0 -> exactly 0.
  const __m256d log2e_2 = _mm256_set1_pd(2.8853900817779268);  // 2/ln2
  return _mm256_fmadd_pd(_mm256_mul_pd(z, s), log2e_2, e);
}

inline double hsum_pd(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

inline std::uint64_t hsum_epi64(__m256i v) {
  const __m128i lo = _mm256_castsi256_si128(v);
  const __m128i hi = _mm256_extracti128_si256(v, 1);
  const __m128i pair = _mm_add_epi64(lo, hi);
  return static_cast<std::uint64_t>(_mm_cvtsi128_si64(pair)) +
         static_cast<std::uint64_t>(
             _mm_cvtsi128_si64(_mm_unpackhi_epi64(pair, pair)));
}

}  // namespace

double entropy_bits_sum(const float* p, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_cvtps_pd(_mm_loadu_ps(p + i));
    const __m256d valid = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GT_OQ),
                                        _mm256_cmp_pd(x, one, _CMP_LT_OQ));
    // Substitute 0.5 on invalid lanes so log2 sees a safe argument.
    const __m256d xs = _mm256_blendv_pd(half, x, valid);
    const __m256d qs = _mm256_sub_pd(one, xs);
    const __m256d t = _mm256_fmadd_pd(xs, log2_pd(xs),
                                      _mm256_mul_pd(qs, log2_pd(qs)));
    acc = _mm256_add_pd(acc, _mm256_and_pd(valid, _mm256_sub_pd(zero, t)));
  }
  double sum = hsum_pd(acc);
  for (; i < n; ++i) {
    const double x = static_cast<double>(p[i]);
    if (x <= 0.0 || x >= 1.0) continue;
    const double q = 1.0 - x;
    sum -= x * std::log2(x) + q * std::log2(q);
  }
  return sum;
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                           _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                           _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
  }
  double sum = hsum_pd(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

void binarize_f32(const float* p, std::size_t n, float threshold, std::uint8_t* out) {
  const __m256 thr = _mm256_set1_ps(threshold);
  const __m128i zero128 = _mm_setzero_si128();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 cmp = _mm256_cmp_ps(_mm256_loadu_ps(p + i), thr, _CMP_GE_OQ);
    const __m256i mask32 =
        _mm256_and_si256(_mm256_castps_si256(cmp), _mm256_set1_epi32(1));
    const __m128i lo = _mm256_castsi256_si128(mask32);
    const __m128i hi = _mm256_extracti128_si256(mask32, 1);
    const __m128i packed16 = _mm_packus_epi32(lo, hi);
    const __m128i packed8 = _mm_packus_epi16(packed16, zero128);
    _mm_storel_epi64(reinterpret_cast<__m128i*>(out + i), packed8);
  }
  for (; i < n; ++i) out[i] = p[i] >= threshold ? 1 : 0;
}

std::uint64_t count_nonzero_u8(const std::uint8_t* a, std::size_t n) {
  const __m256i one = _mm256_set1_epi8(1);
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc = zero;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i x =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(_mm256_min_epu8(x, one), zero));
  }
  std::uint64_t c = hsum_epi64(acc);
  for (; i < n; ++i) c += a[i] != 0;
  return c;
}

std::uint64_t count_and_u8(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  const __m256i one = _mm256_set1_epi8(1);
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc = zero;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i xa =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i xb =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i both =
        _mm256_and_si256(_mm256_min_epu8(xa, one), _mm256_min_epu8(xb, one));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(both, zero));
  }
  std::uint64_t c = hsum_epi64(acc);
  for (; i < n; ++i) c += (a[i] != 0) && (b[i] != 0);
  return c;
}

double clipped_term_sum(const double* r, std::size_t n, double adv, double clip_lo,
                        double clip_hi) {
  const __m256d lo = _mm256_set1_pd(clip_lo);
  const __m256d hi = _mm256_set1_pd(clip_hi);
  const __m256d a = _mm256_set1_pd(adv);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(r + i);
    const __m256d clipped = _mm256_min_pd(_mm256_max_pd(x, lo), hi);
    acc = _mm256_add_pd(
        acc, _mm256_min_pd(_mm256_mul_pd(x, a), _mm256_mul_pd(clipped, a)));
  }
  double sum = hsum_pd(acc);
  for (; i < n; ++i) {
    const double clipped = std::fmin(std::fmax(r[i], clip_lo), clip_hi);
    sum += std::fmin(r[i] * adv, clipped * adv);
  }
  return sum;
}

}  // namespace care::kernels::avx2
