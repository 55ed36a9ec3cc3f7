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
#include "detcal/matching.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "detcal/error.hpp"
#include "detcal/simd/kernels.hpp"

namespace detcal {
namespace {

// Objects of one (image, class) cell in SoA layout for the IoU kernel.
struct Cell {
  std::vector<std::int64_t> object_index;
  std::vector<double> x_min, y_min, x_max, y_max;
  std::vector<char> taken;

  simd::BoxColumns Columns() const { return {x_min, y_min, x_max, y_max}; }
};

}  // namespace

std::size_t MatchResult::TruePositiveCount() const {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [](std::int64_t a) { return a >= 0; }));
}

MatchResult Match(const Dataset& dataset, double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw ValidationError("tau must lie in [0, 1)");
  const double threshold = MatchThreshold(tau);

  std::map<std::pair<ImageId, ClassId>, Cell> cells;
  const auto& objects = dataset.ground_truth();
  for (std::size_t g = 0; g < objects.size(); ++g) {
    Cell& cell = cells[{objects[g].image_id, objects[g].category_id}];
    cell.object_index.push_back(static_cast<std::int64_t>(g));
    cell.x_min.push_back(objects[g].box.x_min);
    cell.y_min.push_back(objects[g].box.y_min);
    cell.x_max.push_back(objects[g].box.x_max);
    cell.y_max.push_back(objects[g].box.y_max);
    cell.taken.push_back(0);
  }

  const auto& dets = dataset.detections();
  MatchResult result;
  result.tau = tau;
  result.assignment.assign(dets.size(), -1);
  result.iou.assign(dets.size(), 0.0);

  std::vector<double> overlaps;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto it = cells.find({dets[i].image_id, dets[i].category_id});
    if (it == cells.end()) continue;
    Cell& cell = it->second;
    overlaps.resize(cell.object_index.size());
    simd::IouOneToMany(dets[i].box, cell.Columns(), overlaps);

    std::ptrdiff_t best = -1;
    double best_iou = threshold;
    for (std::size_t k = 0; k < overlaps.size(); ++k) {
      if (cell.taken[k]) continue;
      // Strict '>' after the first hit keeps the lowest index among ties.
      if (best < 0 ? overlaps[k] >= best_iou : overlaps[k] > best_iou) {
        best = static_cast<std::ptrdiff_t>(k);
        best_iou = overlaps[k];
      }
    }
    if (best >= 0) {
      cell.taken[static_cast<std::size_t>(best)] = 1;
      result.assignment[i] = cell.object_index[static_cast<std::size_t>(best)];
      result.iou[i] = best_iou;
    }
  }
  return result;
}

}  // namespace detcal
