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
#include "detcal/simd/kernels.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "support/synthetic.hpp"

namespace detcal::simd {
namespace {

using testing::Rng;

std::vector<SimdLevel> WideLevels() {
  std::vector<SimdLevel> levels;
  if (IsAvailable(SimdLevel::kAvx2)) levels.push_back(SimdLevel::kAvx2);
  return levels;
}

bool SameBits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

double RelativeGap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

TEST_CASE("scalar is always available and the level can be forced") {
  CHECK(IsAvailable(SimdLevel::kScalar));
  const SimdLevel saved = ActiveLevel();
  SetActiveLevel(SimdLevel::kScalar);
  CHECK(ActiveLevel() == SimdLevel::kScalar);
  SetActiveLevel(saved);
  CHECK(ToString(SimdLevel::kScalar) == "scalar");
}

TEST_CASE("IoU kernels are bit-identical across levels") {
  Rng rng(81);
  for (SimdLevel level : WideLevels()) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 101u}) {
      std::vector<double> x1(n), y1(n), x2(n), y2(n);
      for (std::size_t k = 0; k < n; ++k) {
        x1[k] = rng.Uniform(0, 50);
        y1[k] = rng.Uniform(0, 50);
        // Mix in degenerate, touching and identical boxes.
        const int shape = rng.Int(0, 4);
        x2[k] = shape == 0 ? x1[k] : x1[k] + rng.Uniform(0, 40);
        y2[k] = shape == 1 ? y1[k] : y1[k] + rng.Uniform(0, 40);
        if (shape == 2) {
          x1[k] = 10;
          y1[k] = 10;
          x2[k] = 30;
          y2[k] = 30;
        }
      }
      const BoxColumns cols{x1, y1, x2, y2};
      const BBox box{10, 10, 30, 30};
      std::vector<double> a(n), b(n);
      IouOneToMany(SimdLevel::kScalar, box, cols, a);
      IouOneToMany(level, box, cols, b);
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(SameBits(a[k], b[k]));
        CHECK(a[k] == Iou(box, BBox{x1[k], y1[k], x2[k], y2[k]}));
      }
    }
  }
}

TEST_CASE("logistic loss kernels agree across levels") {
  Rng rng(82);
  for (SimdLevel level : WideLevels()) {
    for (std::size_t n : {1u, 2u, 7u, 8u, 33u, 1000u}) {
      std::vector<double> z(n), t(n);
      for (std::size_t k = 0; k < n; ++k) {
        z[k] = rng.Uniform(-17, 17);
        t[k] = rng.Uniform();
      }
      for (double scale : {0.0, 0.5, 3.0, 40.0}) {
        const LogisticLoss a = LogisticNll(SimdLevel::kScalar, z, t, scale, 0.3);
        const LogisticLoss b = LogisticNll(level, z, t, scale, 0.3);
        CHECK(RelativeGap(b.loss, a.loss) < 1e-13);
        CHECK(std::abs(b.grad_scale - a.grad_scale) < 1e-12 * (1.0 + static_cast<double>(n)));
        CHECK(std::abs(b.grad_shift - a.grad_shift) < 1e-12 * (1.0 + static_cast<double>(n)));
      }
    }
  }
}

TEST_CASE("distance and Gaussian moment kernels agree across levels") {
  Rng rng(83);
  for (SimdLevel level : WideLevels()) {
    for (std::size_t n : {0u, 1u, 5u, 9u, 250u}) {
      std::vector<double> x(n), v(n);
      for (std::size_t k = 0; k < n; ++k) {
        x[k] = rng.Uniform();
        v[k] = rng.Uniform();
      }
      const double center = rng.Uniform();
      const double ref = MinSqDistance(SimdLevel::kScalar, center, x);
      CHECK(SameBits(ref, MinSqDistance(level, center, x)));
      const double inv = 1.0 / (2.0 * 0.05 * 0.05);
      const GaussianMoments a = GaussianWeightedMoments(SimdLevel::kScalar, center, x, v, inv, n ? ref : 0.0);
      const GaussianMoments b = GaussianWeightedMoments(level, center, x, v, inv, n ? ref : 0.0);
      CHECK(RelativeGap(b.weight_sum, a.weight_sum) < 1e-13);
      CHECK(RelativeGap(b.weighted_value_sum, a.weighted_value_sum) < 1e-13);
    }
  }
}

TEST_CASE("vector exp and log1p track the standard library") {
  std::vector<double> x;
  for (double v = -745.0; v <= 709.0; v += 0.37) x.push_back(v);
  x.push_back(0.0);
  x.push_back(-0.0);
  x.push_back(-800.0);
  x.push_back(-std::numeric_limits<double>::infinity());
  std::vector<double> y;
  for (int k = 0; k <= 2000; ++k) y.push_back(k / 2000.0);
  y.push_back(1e-300);
  for (SimdLevel level : {SimdLevel::kScalar, SimdLevel::kAvx2}) {
    if (!IsAvailable(level)) continue;
    std::vector<double> e(x.size());
    Exp(level, x, e);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double want = std::exp(x[k]);
      if (want < std::numeric_limits<double>::min()) {
        CHECK(e[k] <= std::numeric_limits<double>::min());
      } else {
        CHECK(std::abs(e[k] - want) <= 4e-16 * want);
      }
    }
    std::vector<double> l(y.size());
    Log1pUnit(level, y, l);
    for (std::size_t k = 0; k < y.size(); ++k) {
      CHECK(std::abs(l[k] - std::log1p(y[k])) <= 4e-16 * std::max(std::log1p(y[k]), 1e-300));
    }
  }
}

TEST_CASE("kernels validate span lengths") {
  std::vector<double> a(3), b(2);
  CHECK_THROWS_AS(LogisticNll(SimdLevel::kScalar, a, b, 1.0, 0.0), std::invalid_argument);
  std::vector<double> out(2);
  const BoxColumns cols{a, a, a, a};
  CHECK_THROWS_AS(IouOneToMany(SimdLevel::kScalar, BBox{}, cols, out), std::invalid_argument);
}

}  // namespace
}  // namespace detcal::simd
