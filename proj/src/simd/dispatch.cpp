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
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "detcal/simd/kernels.hpp"
#include "simd/kernel_table.hpp"

namespace detcal::simd {
namespace {

bool CpuHasAvx2() {
#if defined(DETCAL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

SimdLevel InitialLevel() {
  const char* env = std::getenv("DETCAL_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return SimdLevel::kScalar;
  return DetectedLevel();
}

std::atomic<SimdLevel>& ActiveSlot() {
  static std::atomic<SimdLevel> slot{InitialLevel()};
  return slot;
}

const internal::KernelTable& Table(SimdLevel level) {
#if defined(DETCAL_HAVE_AVX2)
  if (level == SimdLevel::kAvx2) return internal::Avx2Kernels();
#endif
  (void)level;
  return internal::ScalarKernels();
}

void CheckSameSize(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view ToString(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return "scalar";
    case SimdLevel::kAvx2:
      return "avx2";
  }
  return "unknown";
}

SimdLevel DetectedLevel() {
  static const SimdLevel level = CpuHasAvx2() ? SimdLevel::kAvx2 : SimdLevel::kScalar;
  return level;
}

bool IsAvailable(SimdLevel level) {
  return level == SimdLevel::kScalar || (level == SimdLevel::kAvx2 && CpuHasAvx2());
}

SimdLevel ActiveLevel() { return ActiveSlot().load(std::memory_order_relaxed); }

void SetActiveLevel(SimdLevel level) {
  if (!IsAvailable(level)) {
    throw std::invalid_argument("SIMD level not available: " + std::string(ToString(level)));
  }
  ActiveSlot().store(level, std::memory_order_relaxed);
}

void IouOneToMany(SimdLevel level, const BBox& box, const BoxColumns& boxes,
                  std::span<double> out) {
  CheckSameSize(boxes.y_min.size(), boxes.size(), "IouOneToMany");
  CheckSameSize(boxes.x_max.size(), boxes.size(), "IouOneToMany");
  CheckSameSize(boxes.y_max.size(), boxes.size(), "IouOneToMany");
  CheckSameSize(out.size(), boxes.size(), "IouOneToMany");
  Table(level).iou_one_to_many(box, boxes.x_min.data(), boxes.y_min.data(),
                               boxes.x_max.data(), boxes.y_max.data(),
                               boxes.size(), out.data());
}

LogisticLoss LogisticNll(SimdLevel level, std::span<const double> z,
                         std::span<const double> t, double scale, double shift) {
  CheckSameSize(z.size(), t.size(), "LogisticNll");
  return Table(level).logistic_nll(z.data(), t.data(), z.size(), scale, shift);
}

double MinSqDistance(SimdLevel level, double center, std::span<const double> x) {
  return Table(level).min_sq_distance(center, x.data(), x.size());
}

GaussianMoments GaussianWeightedMoments(SimdLevel level, double center,
                                        std::span<const double> x,
                                        std::span<const double> values,
                                        double inv_two_h2, double reference_sq) {
  CheckSameSize(x.size(), values.size(), "GaussianWeightedMoments");
  return Table(level).gaussian_moments(center, x.data(), values.data(), x.size(),
                                       inv_two_h2, reference_sq);
}

void Exp(SimdLevel level, std::span<const double> x, std::span<double> out) {
  CheckSameSize(x.size(), out.size(), "Exp");
  Table(level).exp(x.data(), x.size(), out.data());
}

void Log1pUnit(SimdLevel level, std::span<const double> y, std::span<double> out) {
  CheckSameSize(y.size(), out.size(), "Log1pUnit");
  Table(level).log1p_unit(y.data(), y.size(), out.data());
}

void IouOneToMany(const BBox& box, const BoxColumns& boxes, std::span<double> out) {
  IouOneToMany(ActiveLevel(), box, boxes, out);
}

LogisticLoss LogisticNll(std::span<const double> z, std::span<const double> t,
                         double scale, double shift) {
  return LogisticNll(ActiveLevel(), z, t, scale, shift);
}

double MinSqDistance(double center, std::span<const double> x) {
  return MinSqDistance(ActiveLevel(), center, x);
}

GaussianMoments GaussianWeightedMoments(double center, std::span<const double> x,
                                        std::span<const double> values,
                                        double inv_two_h2, double reference_sq) {
  return GaussianWeightedMoments(ActiveLevel(), center, x, values, inv_two_h2,
                                 reference_sq);
}

}  // namespace detcal::simd
