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
#ifndef DETCAL_MATCHING_HPP_
#define DETCAL_MATCHING_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "detcal/dataset.hpp"

namespace detcal {

// Overlap floor that stands in for "IoU > 0" when the TP-validation
// threshold is 0.
inline constexpr double kMatchOverlapFloor = 1e-10;

struct EvalConfig {
  double tau = 0.0;
  int bins = 25;
  int top_k = kDefaultTopK;
};

// Assignment of detections (canonical order) to ground-truth objects.
struct MatchResult {
  double tau = 0.0;
  // Index into Dataset::ground_truth(), or -1 for a false positive.
  std::vector<std::int64_t> assignment;
  // IoU with the matched object; 0 for false positives.
  std::vector<double> iou;

  bool IsTruePositive(std::size_t detection) const { return assignment[detection] >= 0; }
  std::size_t TruePositiveCount() const;
};

// Effective IoU needed to validate a TP at the given tau.
inline double MatchThreshold(double tau) { return tau > 0.0 ? tau : kMatchOverlapFloor; }

// Greedy class-aware matching per image: detections in canonical order each
// take the unmatched same-class object of highest IoU (ties: lowest object
// index), provided that IoU reaches MatchThreshold(tau).
MatchResult Match(const Dataset& dataset, double tau);

}  // namespace detcal

#endif  // DETCAL_MATCHING_HPP_
