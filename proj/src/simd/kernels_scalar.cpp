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
// Scalar reference kernels. These define the semantics; the vector kernels
// must reproduce them.

#include <cmath>
#include <cstddef>
#include <limits>

#include "simd/kernel_table.hpp"

namespace detcal::simd::internal {
namespace {

void IouOneToManyScalar(const BBox& box, const double* x_min,
                        const double* y_min, const double* x_max,
                        const double* y_max, std::size_t n, double* out) {
  const double area_a = (box.x_max - box.x_min) * (box.y_max - box.y_min);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = IouScalar(box.x_min, box.y_min, box.x_max, box.y_max, area_a,
                       x_min[k], y_min[k], x_max[k], y_max[k]);
  }
}

LogisticLoss LogisticNllScalar(const double* z, const double* t,
                               std::size_t n, double scale, double shift) {
  LogisticLoss acc;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = scale * z[i] + shift;
    const double e = std::exp(-std::abs(u));
    const double softplus = std::max(u, 0.0) + std::log1p(e);
    const double sigmoid = u >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    const double residual = sigmoid - t[i];
    acc.loss += softplus - t[i] * u;
    acc.grad_scale += residual * z[i];
    acc.grad_shift += residual;
  }
  return acc;
}

double MinSqDistanceScalar(double center, const double* x, std::size_t n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - center;
    best = std::min(best, d * d);
  }
  return best;
}

GaussianMoments GaussianMomentsScalar(double center, const double* x,
                                      const double* values, std::size_t n,
                                      double inv_two_h2, double reference_sq) {
  GaussianMoments acc;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - center;
    const double w = std::exp(-((d * d - reference_sq) * inv_two_h2));
    acc.weight_sum += w;
    acc.weighted_value_sum += w * values[k];
  }
  return acc;
}

void ExpScalar(const double* x, std::size_t n, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = std::exp(x[k]);
}

void Log1pUnitScalar(const double* y, std::size_t n, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = std::log1p(y[k]);
}

}  // namespace

const KernelTable& ScalarKernels() {
  static const KernelTable table{
      &IouOneToManyScalar, &LogisticNllScalar,     &MinSqDistanceScalar,
      &GaussianMomentsScalar, &ExpScalar, &Log1pUnitScalar,
  };
  return table;
}

}  // namespace detcal::simd::internal
