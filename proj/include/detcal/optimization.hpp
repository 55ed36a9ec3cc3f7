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
#ifndef DETCAL_OPTIMIZATION_HPP_
#define DETCAL_OPTIMIZATION_HPP_

#include <functional>
#include <span>
#include <vector>

#include "detcal/error.hpp"

namespace detcal {

struct OptimizeResult {
  std::vector<double> parameters;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Raised when the objective or its gradient stops being finite. Carries the
// last iterate at which both were finite.
class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, std::vector<double> last_good)
      : Error(what), last_good_(std::move(last_good)) {}
  const std::vector<double>& last_good() const { return last_good_; }

 private:
  std::vector<double> last_good_;
};

// Returns f(x) and writes the gradient into grad (same length as x).
using GradientObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  double tolerance = 1e-8;  // on the infinity norm of the projected gradient
  int max_iterations = 200;
  int memory = 10;
  double c1 = 1e-4;  // strong Wolfe sufficient decrease
  double c2 = 0.9;   // strong Wolfe curvature
  int max_line_search_steps = 60;
  // Optional per-coordinate lower bounds (empty: unbounded). Iterates are
  // projected onto the box after every step.
  std::vector<double> lower_bounds;
};

// Limited-memory BFGS with a strong-Wolfe line search. The objective value
// never increases between accepted iterates.
OptimizeResult Lbfgs(const GradientObjective& objective, std::vector<double> x0,
                     const LbfgsOptions& options = {});

// Golden-section search for a unimodal function on [lo, hi]; stops once the
// bracket is narrower than tol and returns its midpoint. The function is
// never evaluated outside [lo, hi].
OptimizeResult GoldenSection(const std::function<double(double)>& objective, double lo, double hi,
                             double tol);

// Weighted least-squares nondecreasing fit (pool adjacent violators, O(n)).
// x must be strictly ascending; it only fixes the order of the points.
// Throws ValidationError on length mismatch, non-positive weights or
// unordered x.
std::vector<double> Pava(std::span<const double> x, std::span<const double> y,
                         std::span<const double> w);

}  // namespace detcal

#endif  // DETCAL_OPTIMIZATION_HPP_
