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
#include "detcal/optimization.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace detcal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho = 0.0;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db); NaN when
// the cubic has no real minimizer.
double CubicMinimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

class LineSearch {
 public:
  LineSearch(const GradientObjective& objective, std::span<const double> x, std::span<const double> dir,
             std::span<const double> lower, double f0, double slope0, const LbfgsOptions& options)
      : objective_(objective), x_(x), dir_(dir), lower_(lower), f0_(f0), slope0_(slope0),
        options_(options), trial_(x.size()), grad_(x.size()) {}

  // Strong-Wolfe step length in (0, alpha_max], or 0 if no acceptable step
  // was found.
  double Run(double alpha_init, double alpha_max) {
    double a_prev = 0.0;
    double f_prev = f0_;
    double d_prev = slope0_;
    double alpha = std::min(alpha_init, alpha_max);
    for (int step = 0; step < options_.max_line_search_steps; ++step) {
      const auto [f, d] = Evaluate(alpha);
      if (f > f0_ + options_.c1 * alpha * slope0_ || (step > 0 && f >= f_prev)) {
        return Zoom(a_prev, f_prev, d_prev, alpha, f, d);
      }
      if (std::abs(d) <= -options_.c2 * slope0_) return alpha;
      if (d >= 0.0) return Zoom(alpha, f, d, a_prev, f_prev, d_prev);
      if (alpha >= alpha_max) return alpha;
      a_prev = alpha;
      f_prev = f;
      d_prev = d;
      alpha = std::min(2.0 * alpha, alpha_max);
    }
    return a_prev;
  }

 private:
  std::pair<double, double> Evaluate(double alpha) {
    for (std::size_t i = 0; i < x_.size(); ++i) {
      trial_[i] = x_[i] + alpha * dir_[i];
      if (!lower_.empty()) trial_[i] = std::max(trial_[i], lower_[i]);
    }
    const double f = objective_(trial_, grad_);
    if (!std::isfinite(f) || !AllFinite(grad_)) {
      throw OptimizationError("objective or gradient not finite during line search",
                              std::vector<double>(x_.begin(), x_.end()));
    }
    return {f, Dot(grad_, dir_)};
  }

  double Zoom(double lo, double f_lo, double d_lo, double hi, double f_hi, double d_hi) {
    for (int step = 0; step < options_.max_line_search_steps; ++step) {
      const double left = std::min(lo, hi);
      const double right = std::max(lo, hi);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) break;
      double alpha = CubicMinimizer(lo, f_lo, d_lo, hi, f_hi, d_hi);
      if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > right - 0.1 * width) {
        alpha = 0.5 * (lo + hi);
      }
      const auto [f, d] = Evaluate(alpha);
      if (f > f0_ + options_.c1 * alpha * slope0_ || f >= f_lo) {
        hi = alpha;
        f_hi = f;
        d_hi = d;
      } else {
        if (std::abs(d) <= -options_.c2 * slope0_) return alpha;
        if (d * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
          d_hi = d_lo;
        }
        lo = alpha;
        f_lo = f;
        d_lo = d;
      }
    }
    return lo;
  }

  const GradientObjective& objective_;
  std::span<const double> x_;
  std::span<const double> dir_;
  std::span<const double> lower_;
  double f0_;
  double slope0_;
  const LbfgsOptions& options_;
  std::vector<double> trial_;
  std::vector<double> grad_;
};

}  // namespace

OptimizeResult Lbfgs(const GradientObjective& objective, std::vector<double> x0,
                     const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  const std::span<const double> lower(options.lower_bounds);
  if (!lower.empty() && lower.size() != n) {
    throw std::invalid_argument("lower bounds must match the parameter count");
  }
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < lower.size(); ++i) x[i] = std::max(x[i], lower[i]);
  };
  auto at_bound = [&](const std::vector<double>& x, std::size_t i) {
    return !lower.empty() && x[i] <= lower[i];
  };

  std::vector<double> x = std::move(x0);
  project(x);
  std::vector<double> g(n);
  double f = objective(x, g);
  if (!std::isfinite(f) || !AllFinite(g)) {
    throw OptimizationError("objective or gradient not finite at the starting point", x);
  }

  std::deque<CurvaturePair> history;
  std::vector<double> pg(n);
  std::vector<double> dir(n);
  std::vector<double> alpha_buf;
  std::vector<double> x_new(n);
  std::vector<double> g_new(n);

  OptimizeResult result;
  for (int iter = 0;; ++iter) {
    double pg_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pg[i] = (at_bound(x, i) && g[i] > 0.0) ? 0.0 : g[i];
      pg_norm = std::max(pg_norm, std::abs(pg[i]));
    }
    result.iterations = iter;
    if (pg_norm < options.tolerance) {
      result.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    // Two-loop recursion on the projected gradient.
    dir = pg;
    alpha_buf.assign(history.size(), 0.0);
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha_buf[k] = history[k].rho * Dot(history[k].s, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[k] * history[k].y[i];
    }
    if (!history.empty()) {
      const CurvaturePair& last = history.back();
      const double gamma = Dot(last.s, last.y) / Dot(last.y, last.y);
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * Dot(history[k].y, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_buf[k] - beta) * history[k].s[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = -dir[i];
      if (at_bound(x, i) && dir[i] < 0.0) dir[i] = 0.0;
    }
    double slope = Dot(g, dir);
    if (!(slope < 0.0)) {
      history.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -pg[i];
      slope = Dot(g, dir);
      if (!(slope < 0.0)) break;
    }

    double alpha_max = kInf;
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (dir[i] < 0.0) alpha_max = std::min(alpha_max, (x[i] - lower[i]) / -dir[i]);
    }
    double dir_norm = 0.0;
    for (double v : dir) dir_norm = std::max(dir_norm, std::abs(v));
    const double alpha_init = history.empty() ? std::min(1.0, 1.0 / dir_norm) : 1.0;

    LineSearch search(objective, x, dir, lower, f, slope, options);
    const double alpha = search.Run(alpha_init, alpha_max);
    if (!(alpha > 0.0)) break;

    for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + alpha * dir[i];
    project(x_new);
    const double f_new = objective(x_new, g_new);
    if (!std::isfinite(f_new) || !AllFinite(g_new)) {
      throw OptimizationError("objective or gradient not finite at accepted step", x);
    }
    if (f_new > f) break;

    CurvaturePair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = x_new[i] - x[i];
      pair.y[i] = g_new[i] - g[i];
    }
    const double sy = Dot(pair.s, pair.y);
    if (sy > 1e-12 * std::sqrt(Dot(pair.s, pair.s) * Dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }
    const bool stalled = (f - f_new) <= 0.0 && std::equal(x.begin(), x.end(), x_new.begin());
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    if (stalled) break;
  }
  result.parameters = std::move(x);
  result.value = f;
  return result;
}

OptimizeResult GoldenSection(const std::function<double(double)>& objective, double lo, double hi,
                             double tol) {
  if (!(lo < hi)) throw std::invalid_argument("golden section needs lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("golden section needs tol > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto inside = [&](double v) { return std::clamp(v, lo, hi); };

  double a = lo;
  double b = hi;
  double c = inside(b - inv_phi * (b - a));
  double d = inside(a + inv_phi * (b - a));
  double fc = objective(c);
  double fd = objective(d);
  OptimizeResult result;
  while (b - a >= tol) {
    const double width = b - a;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = inside(b - inv_phi * (b - a));
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = inside(a + inv_phi * (b - a));
      fd = objective(d);
    }
    ++result.iterations;
    if (!(b - a < width)) break;
  }
  const double mid = inside(0.5 * (a + b));
  result.parameters = {mid};
  result.value = objective(mid);
  result.converged = b - a < tol;
  return result;
}

std::vector<double> Pava(std::span<const double> x, std::span<const double> y,
                         std::span<const double> w) {
  const std::size_t n = y.size();
  if (x.size() != n || w.size() != n) throw ValidationError("pava: length mismatch");
  if (n == 0) throw ValidationError("pava: empty input");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] > 0.0)) throw ValidationError("pava: weights must be positive");
    if (i > 0 && !(x[i - 1] < x[i])) throw ValidationError("pava: x must be strictly ascending");
  }

  struct Block {
    std::size_t begin;
    double weighted_sum;
    double weight;
    double Mean() const { return weighted_sum / weight; }
  };
  std::vector<Block> stack;
  stack.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    stack.push_back(Block{i, w[i] * y[i], w[i]});
    while (stack.size() >= 2 && stack[stack.size() - 2].Mean() > stack.back().Mean()) {
      const Block top = stack.back();
      stack.pop_back();
      stack.back().weighted_sum += top.weighted_sum;
      stack.back().weight += top.weight;
    }
  }

  // Block values are recomputed from their members in index order, so the
  // result depends only on the final partition and not on merge order.
  std::vector<double> fitted(n);
  for (std::size_t b = 0; b < stack.size(); ++b) {
    const std::size_t begin = stack[b].begin;
    const std::size_t end = b + 1 < stack.size() ? stack[b + 1].begin : n;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      num += w[i] * y[i];
      den += w[i];
    }
    std::fill(fitted.begin() + static_cast<std::ptrdiff_t>(begin),
              fitted.begin() + static_cast<std::ptrdiff_t>(end), num / den);
  }
  return fitted;
}

}  // namespace detcal
