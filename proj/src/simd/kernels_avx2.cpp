/* Copyright 2026 The detcal Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// AVX2 kernels. Compiled with -mavx2 -mfma but written without fused
// multiply-add so that element-wise results match the scalar reference.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <limits>

#include "simd/kernel_table.hpp"

namespace detcal::simd::internal {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d Abs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double HorizontalMin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// 2^n for integral n in [-1022, 1023].
inline __m256d Pow2(__m256d n) {
  __m256i bits = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
}

// exp(x): Cody-Waite reduction by ln 2 and a (2,3) Pade-type rational on
// |r| <= ln2/2, then scaling by 2^n split in two factors so that results in
// the subnormal range are reachable.
inline __m256d ExpPd(__m256d x) {
  const __m256d kHi = _mm256_set1_pd(709.782712893383973096);
  const __m256d kLo = _mm256_set1_pd(-745.133219101941108420);
  const __m256d overflow = _mm256_cmp_pd(x, kHi, _CMP_GT_OQ);
  const __m256d underflow = _mm256_cmp_pd(x, kLo, _CMP_LT_OQ);
  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, kLo), kHi);

  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634073599)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_sub_pd(xc, _mm256_mul_pd(n, _mm256_set1_pd(6.93145751953125E-1)));
  r = _mm256_sub_pd(r, _mm256_mul_pd(n, _mm256_set1_pd(1.42860682030941723212E-6)));

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_add_pd(_mm256_mul_pd(p, rr), _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_add_pd(_mm256_mul_pd(p, rr), _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_add_pd(_mm256_mul_pd(q, rr), _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_add_pd(_mm256_mul_pd(q, rr), _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_add_pd(_mm256_mul_pd(q, rr), _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_add_pd(e, e));

  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  e = _mm256_mul_pd(_mm256_mul_pd(e, Pow2(n1)), Pow2(n2));

  e = _mm256_blendv_pd(
      e, _mm256_set1_pd(std::numeric_limits<double>::infinity()), overflow);
  return _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
}

// log1p(y) for y in [0, 1] through 2*atanh(y / (2 + y)).
inline __m256d Log1pUnitPd(__m256d y) {
  static constexpr int kTerms = 18;
  const __m256d s = _mm256_div_pd(y, _mm256_add_pd(_mm256_set1_pd(2.0), y));
  const __m256d w = _mm256_mul_pd(s, s);
  __m256d poly = _mm256_set1_pd(1.0 / (2 * (kTerms - 1) + 1));
  for (int k = kTerms - 2; k >= 0; --k) {
    poly = _mm256_add_pd(_mm256_mul_pd(poly, w), _mm256_set1_pd(1.0 / (2 * k + 1)));
  }
  return _mm256_mul_pd(_mm256_add_pd(s, s), poly);
}

void IouOneToManyAvx2(const BBox& box, const double* x_min,
                      const double* y_min, const double* x_max,
                      const double* y_max, std::size_t n, double* out) {
  const double area_a = (box.x_max - box.x_min) * (box.y_max - box.y_min);
  const __m256d ax1 = _mm256_set1_pd(box.x_min);
  const __m256d ay1 = _mm256_set1_pd(box.y_min);
  const __m256d ax2 = _mm256_set1_pd(box.x_max);
  const __m256d ay2 = _mm256_set1_pd(box.y_max);
  const __m256d aa = _mm256_set1_pd(area_a);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);

  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d bx1 = _mm256_loadu_pd(x_min + k);
    const __m256d by1 = _mm256_loadu_pd(y_min + k);
    const __m256d bx2 = _mm256_loadu_pd(x_max + k);
    const __m256d by2 = _mm256_loadu_pd(y_max + k);
    // Operand order mirrors std::min/std::max so signed zeros agree.
    const __m256d iw = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(bx2, ax2), _mm256_max_pd(bx1, ax1)), zero);
    const __m256d ih = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(by2, ay2), _mm256_max_pd(by1, ay1)), zero);
    const __m256d inter = _mm256_mul_pd(iw, ih);
    const __m256d area_b =
        _mm256_mul_pd(_mm256_sub_pd(bx2, bx1), _mm256_sub_pd(by2, by1));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(aa, area_b), inter);
    const __m256d positive = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
    const __m256d ratio = _mm256_min_pd(_mm256_div_pd(inter, uni), one);
    _mm256_storeu_pd(out + k, _mm256_and_pd(ratio, positive));
  }
  for (; k < n; ++k) {
    out[k] = IouScalar(box.x_min, box.y_min, box.x_max, box.y_max, area_a,
                       x_min[k], y_min[k], x_max[k], y_max[k]);
  }
}

LogisticLoss LogisticNllAvx2(const double* z, const double* t, std::size_t n,
                             double scale, double shift) {
  const __m256d vscale = _mm256_set1_pd(scale);
  const __m256d vshift = _mm256_set1_pd(shift);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d loss = zero;
  __m256d grad_scale = zero;
  __m256d grad_shift = zero;

  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d zv = _mm256_loadu_pd(z + i);
    const __m256d tv = _mm256_loadu_pd(t + i);
    const __m256d u = _mm256_add_pd(_mm256_mul_pd(vscale, zv), vshift);
    const __m256d e = ExpPd(_mm256_sub_pd(zero, Abs(u)));
    const __m256d softplus = _mm256_add_pd(_mm256_max_pd(u, zero), Log1pUnitPd(e));
    const __m256d one_plus_e = _mm256_add_pd(one, e);
    const __m256d sigmoid =
        _mm256_blendv_pd(_mm256_div_pd(e, one_plus_e), _mm256_div_pd(one, one_plus_e),
                         _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
    const __m256d residual = _mm256_sub_pd(sigmoid, tv);
    loss = _mm256_add_pd(loss, _mm256_sub_pd(softplus, _mm256_mul_pd(tv, u)));
    grad_scale = _mm256_add_pd(grad_scale, _mm256_mul_pd(residual, zv));
    grad_shift = _mm256_add_pd(grad_shift, residual);
  }
  const LogisticLoss tail = ScalarKernels().logistic_nll(z + i, t + i, n - i, scale, shift);
  return LogisticLoss{HorizontalSum(loss) + tail.loss,
                      HorizontalSum(grad_scale) + tail.grad_scale,
                      HorizontalSum(grad_shift) + tail.grad_shift};
}

double MinSqDistanceAvx2(double center, const double* x, std::size_t n) {
  const __m256d c = _mm256_set1_pd(center);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), c);
    best = _mm256_min_pd(best, _mm256_mul_pd(d, d));
  }
  double result = HorizontalMin(best);
  for (; k < n; ++k) {
    const double d = x[k] - center;
    result = std::min(result, d * d);
  }
  return result;
}

GaussianMoments GaussianMomentsAvx2(double center, const double* x,
                                    const double* values, std::size_t n,
                                    double inv_two_h2, double reference_sq) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d inv = _mm256_set1_pd(inv_two_h2);
  const __m256d ref = _mm256_set1_pd(reference_sq);
  const __m256d zero = _mm256_setzero_pd();
  __m256d wsum = zero;
  __m256d wvsum = zero;
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), c);
    const __m256d arg =
        _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(d, d), ref), inv);
    const __m256d w = ExpPd(_mm256_sub_pd(zero, arg));
    wsum = _mm256_add_pd(wsum, w);
    wvsum = _mm256_add_pd(wvsum, _mm256_mul_pd(w, _mm256_loadu_pd(values + k)));
  }
  const GaussianMoments tail = ScalarKernels().gaussian_moments(
      center, x + k, values + k, n - k, inv_two_h2, reference_sq);
  return GaussianMoments{HorizontalSum(wsum) + tail.weight_sum,
                         HorizontalSum(wvsum) + tail.weighted_value_sum};
}

void ExpAvx2(const double* x, std::size_t n, double* out) {
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    _mm256_storeu_pd(out + k, ExpPd(_mm256_loadu_pd(x + k)));
  }
  if (k < n) {
    alignas(32) double buf[kLanes] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = k; j < n; ++j) buf[j - k] = x[j];
    _mm256_store_pd(buf, ExpPd(_mm256_load_pd(buf)));
    for (std::size_t j = k; j < n; ++j) out[j] = buf[j - k];
  }
}

void Log1pUnitAvx2(const double* y, std::size_t n, double* out) {
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    _mm256_storeu_pd(out + k, Log1pUnitPd(_mm256_loadu_pd(y + k)));
  }
  if (k < n) {
    alignas(32) double buf[kLanes] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = k; j < n; ++j) buf[j - k] = y[j];
    _mm256_store_pd(buf, Log1pUnitPd(_mm256_load_pd(buf)));
    for (std::size_t j = k; j < n; ++j) out[j] = buf[j - k];
  }
}

}  // namespace

const KernelTable& Avx2Kernels() {
  static const KernelTable table{
      &IouOneToManyAvx2, &LogisticNllAvx2, &MinSqDistanceAvx2,
      &GaussianMomentsAvx2, &ExpAvx2, &Log1pUnitAvx2,
  };
  return table;
}

}  // namespace detcal::simd::internal
