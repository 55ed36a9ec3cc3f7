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
#ifndef DETCAL_GEOMETRY_HPP_
#define DETCAL_GEOMETRY_HPP_

#include <array>

namespace detcal {

// Axis-aligned box in corner format, pixel coordinates.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  // COCO [x, y, w, h] -> corners.
  static BBox FromXywh(double x, double y, double w, double h) {
    return BBox{x, y, x + w, y + h};
  }

  std::array<double, 4> ToXywh() const {
    return {x_min, y_min, x_max - x_min, y_max - y_min};
  }

  double Width() const { return x_max - x_min; }
  double Height() const { return y_max - y_min; }
  double Area() const { return Width() * Height(); }
  bool IsValid() const { return x_max >= x_min && y_max >= y_min; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Intersection over union. Two boxes whose union has zero area (both
// degenerate) yield 0 rather than NaN.
double Iou(const BBox& a, const BBox& b) noexcept;

}  // namespace detcal

#endif  // DETCAL_GEOMETRY_HPP_
