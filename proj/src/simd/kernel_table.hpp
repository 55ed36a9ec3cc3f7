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
#ifndef DETCAL_SRC_SIMD_KERNEL_TABLE_HPP_
#define DETCAL_SRC_SIMD_KERNEL_TABLE_HPP_

#include <algorithm>
#include <cstddef>

#include "detcal/geometry.hpp"
#include "detcal/simd/kernels.hpp"

namespace detcal::simd::internal {

struct KernelTable {
  void (*iou_one_to_many)(const BBox& box, const double* x_min,
                          const double* y_min, const double* x_max,
                          const double* y_max, std::size_t n, double* out);
  LogisticLoss (*logistic_nll)(const double* z, const double* t,
                               std::size_t n, double scale, double shift);
  double (*min_sq_distance)(double center, const double* x, std::size_t n);
  GaussianMoments (*gaussian_moments)(double center, const double* x,
                                      const double* values, std::size_t n,
                                      double inv_two_h2, double reference_sq);
  void (*exp)(const double* x, std::size_t n, double* out);
  void (*log1p_unit)(const double* y, std::size_t n, double* out);
};

const KernelTable& ScalarKernels();
#if defined(DETCAL_HAVE_AVX2)
const KernelTable& Avx2Kernels();
#endif

// Per-element IoU shared by the reference kernel and the tails of the vector
// kernels. The operation order here is the contract the vector code mirrors.
inline double IouScalar(double ax1, double ay1, double ax2, double ay2,
                        double area_a, double bx1, double by1, double bx2,
                        double by2) {
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double area_b = (bx2 - bx1) * (by2 - by1);
  const double uni = (area_a + area_b) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::min(1.0, inter / uni);
}

}  // namespace detcal::simd::internal

#endif  // DETCAL_SRC_SIMD_KERNEL_TABLE_HPP_
