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
#ifndef DETCAL_SIMD_KERNELS_HPP_
#define DETCAL_SIMD_KERNELS_HPP_

// Data-parallel inner loops used by matching, the logistic calibrators and
// the kernel calibration error. Every kernel has a scalar reference
// implementation; wider implementations are selected at runtime and are
// equivalence-tested against it.
//
//   IouOneToMany    bit-identical across levels (same operation sequence).
//   LogisticNll     reductions; agree to ~1e-13 relative.
//   GaussianMoments reductions; agree to ~1e-13 relative.
//   MinSqDistance   bit-identical.

#include <cstddef>
#include <span>
#include <string_view>

#include "detcal/geometry.hpp"

namespace detcal::simd {

enum class SimdLevel { kScalar, kAvx2 };

std::string_view ToString(SimdLevel level);

// Best level the running CPU supports (and this build contains).
SimdLevel DetectedLevel();

// Level used by the dispatched entry points below. Defaults to
// DetectedLevel(), or kScalar when DETCAL_SIMD=scalar is set in the
// environment at first use.
SimdLevel ActiveLevel();

// Overrides the active level. Throws std::invalid_argument when the level is
// not available on this machine.
void SetActiveLevel(SimdLevel level);

bool IsAvailable(SimdLevel level);

// Box columns in structure-of-arrays layout; all spans have equal length.
struct BoxColumns {
  std::span<const double> x_min;
  std::span<const double> y_min;
  std::span<const double> x_max;
  std::span<const double> y_max;

  std::size_t size() const { return x_min.size(); }
};

struct LogisticLoss {
  double loss = 0.0;
  double grad_scale = 0.0;
  double grad_shift = 0.0;
};

struct GaussianMoments {
  double weight_sum = 0.0;
  double weighted_value_sum = 0.0;
};

// out[k] = Iou(box, boxes[k]).
void IouOneToMany(const BBox& box, const BoxColumns& boxes,
                  std::span<double> out);

// Cross-entropy of sigmoid(scale * z + shift) against soft targets t,
// summed over all elements, with its gradient in (scale, shift).
LogisticLoss LogisticNll(std::span<const double> z, std::span<const double> t,
                         double scale, double shift);

// min_k (x[k] - center)^2, +inf for an empty span.
double MinSqDistance(double center, std::span<const double> x);

// Sums of w_k and w_k * values[k] with
// w_k = exp(-((x[k] - center)^2 - reference_sq) * inv_two_h2).
GaussianMoments GaussianWeightedMoments(double center,
                                        std::span<const double> x,
                                        std::span<const double> values,
                                        double inv_two_h2,
                                        double reference_sq);

// Explicit-level variants used by the equivalence tests and benchmarks.
void IouOneToMany(SimdLevel level, const BBox& box, const BoxColumns& boxes,
                  std::span<double> out);
LogisticLoss LogisticNll(SimdLevel level, std::span<const double> z,
                         std::span<const double> t, double scale,
                         double shift);
double MinSqDistance(SimdLevel level, double center,
                     std::span<const double> x);
GaussianMoments GaussianWeightedMoments(SimdLevel level, double center,
                                        std::span<const double> x,
                                        std::span<const double> values,
                                        double inv_two_h2,
                                        double reference_sq);

// Elementwise math used inside the kernels, exposed for accuracy tests.
// Exp is valid on the full double range; Log1pUnit requires y in [0, 1].
void Exp(SimdLevel level, std::span<const double> x, std::span<double> out);
void Log1pUnit(SimdLevel level, std::span<const double> y,
               std::span<double> out);

}  // namespace detcal::simd

#endif  // DETCAL_SIMD_KERNELS_HPP_
