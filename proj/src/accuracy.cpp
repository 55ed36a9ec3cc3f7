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
#include "detcal/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detcal/error.hpp"

namespace detcal {
namespace {

void CheckMatches(const Dataset& dataset, const MatchResult& matches, double tau) {
  if (matches.tau != tau) {
    throw ValidationError("matches were computed at a different tau than requested");
  }
  if (matches.assignment.size() != dataset.detections().size() ||
      matches.iou.size() != dataset.detections().size()) {
    throw ValidationError("matches do not belong to this dataset");
  }
}

double LocError(double iou, double tau) { return (1.0 - iou) / (1.0 - tau); }

}  // namespace

LrpResult LrpFromCounts(std::size_t n_tp, std::size_t n_detections, std::size_t n_objects,
                        double total_loc_error) {
  LrpResult r;
  r.n_tp = n_tp;
  r.n_fp = n_detections - n_tp;
  r.n_fn = n_objects - n_tp;
  r.total_loc_error = total_loc_error;
  const std::size_t total = r.n_tp + r.n_fp + r.n_fn;
  r.defined = total > 0;
  r.loc_defined = n_tp > 0;
  r.lrp = r.defined ? (static_cast<double>(r.n_fp) + static_cast<double>(r.n_fn) + total_loc_error) /
                          static_cast<double>(total)
                    : std::numeric_limits<double>::quiet_NaN();
  r.lrp_loc = n_tp > 0 ? total_loc_error / static_cast<double>(n_tp) : 0.0;
  r.lrp_fp = n_detections > 0 ? static_cast<double>(r.n_fp) / static_cast<double>(n_detections) : 0.0;
  r.lrp_fn = n_objects > 0 ? static_cast<double>(r.n_fn) / static_cast<double>(n_objects) : 0.0;
  return r;
}

double LrpFromComponents(const LrpResult& r) {
  const double total = static_cast<double>(r.n_tp + r.n_fp + r.n_fn);
  if (total == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double w_loc = static_cast<double>(r.n_tp);
  const double w_fp = static_cast<double>(r.n_tp + r.n_fp);
  const double w_fn = static_cast<double>(r.n_tp + r.n_fn);
  return (w_loc * r.lrp_loc + w_fp * r.lrp_fp + w_fn * r.lrp_fn) / total;
}

LrpResult Lrp(const Dataset& dataset, const MatchResult& matches, double tau) {
  CheckMatches(dataset, matches, tau);
  std::size_t n_tp = 0;
  double loc = 0.0;
  for (std::size_t i = 0; i < matches.assignment.size(); ++i) {
    if (matches.assignment[i] < 0) continue;
    ++n_tp;
    loc += LocError(matches.iou[i], tau);
  }
  return LrpFromCounts(n_tp, dataset.detections().size(), dataset.ground_truth().size(), loc);
}

ClassLrp LrpPerClass(const Dataset& dataset, const MatchResult& matches, double tau) {
  CheckMatches(dataset, matches, tau);
  const auto by_class = DetectionsByClass(dataset);
  const auto objects = GroundTruthCountByClass(dataset);

  ClassLrp out;
  LrpResult sum;
  std::size_t counted = 0;
  for (const auto& [cls, indices] : by_class) {
    std::size_t n_tp = 0;
    double loc = 0.0;
    for (std::size_t i : indices) {
      if (matches.assignment[i] < 0) continue;
      ++n_tp;
      loc += LocError(matches.iou[i], tau);
    }
    const LrpResult r = LrpFromCounts(n_tp, indices.size(), objects.at(cls), loc);
    out.per_class[cls] = r;
    if (objects.at(cls) == 0) continue;
    ++counted;
    sum.lrp += r.lrp;
    sum.lrp_loc += r.lrp_loc;
    sum.lrp_fp += r.lrp_fp;
    sum.lrp_fn += r.lrp_fn;
    sum.n_tp += r.n_tp;
    sum.n_fp += r.n_fp;
    sum.n_fn += r.n_fn;
    sum.total_loc_error += r.total_loc_error;
  }
  if (counted > 0) {
    const double k = static_cast<double>(counted);
    sum.lrp /= k;
    sum.lrp_loc /= k;
    sum.lrp_fp /= k;
    sum.lrp_fn /= k;
    sum.defined = true;
    sum.loc_defined = sum.n_tp > 0;
    out.mean = sum;
  }
  return out;
}

std::vector<double> RecallGrid() {
  std::vector<double> grid(kRecallPoints);
  const double step = 1.0 / (kRecallPoints - 1);
  for (int i = 0; i < kRecallPoints; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) * step;
  grid.back() = 1.0;
  return grid;
}

ApResult AveragePrecision(const Dataset& dataset, const MatchResult& matches) {
  if (matches.assignment.size() != dataset.detections().size()) {
    throw ValidationError("matches do not belong to this dataset");
  }
  const auto by_class = DetectionsByClass(dataset);
  const auto objects = GroundTruthCountByClass(dataset);
  const std::vector<double> grid = RecallGrid();

  ApResult out;
  double sum = 0.0;
  std::vector<double> recall;
  std::vector<double> precision;
  for (const auto& [cls, indices] : by_class) {
    const std::size_t n_obj = objects.at(cls);
    if (n_obj == 0) continue;
    recall.clear();
    precision.clear();
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i : indices) {
      if (matches.assignment[i] >= 0) {
        ++tp;
      } else {
        ++fp;
      }
      recall.push_back(static_cast<double>(tp) / static_cast<double>(n_obj));
      precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    // Monotone envelope from the right.
    for (std::size_t k = precision.size(); k-- > 1;) {
      precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }
    double area = 0.0;
    for (double r : grid) {
      const auto pos = std::lower_bound(recall.begin(), recall.end(), r);
      if (pos != recall.end()) area += precision[static_cast<std::size_t>(pos - recall.begin())];
    }
    const double ap = area / static_cast<double>(kRecallPoints);
    out.per_class[cls] = ap;
    sum += ap;
  }
  if (!out.per_class.empty()) out.mean = sum / static_cast<double>(out.per_class.size());
  return out;
}

std::map<ClassId, OptimalThreshold> LrpOptimalThresholds(const Dataset& dataset, double tau) {
  // Greedy matching visits detections in descending score, so the matches of
  // a score-thresholded subset are exactly the matches of the corresponding
  // prefix of the full matching. One matching therefore serves all
  // candidate thresholds.
  const MatchResult matches = Match(dataset, tau);
  const auto by_class = DetectionsByClass(dataset);
  const auto objects = GroundTruthCountByClass(dataset);
  const auto& dets = dataset.detections();

  std::map<ClassId, OptimalThreshold> out;
  for (const auto& [cls, indices] : by_class) {
    const std::size_t n = indices.size();
    const std::size_t n_obj = objects.at(cls);
    if (n == 0) {
      OptimalThreshold choice;
      if (n_obj > 0) choice.lrp = 1.0;
      out[cls] = choice;
      continue;
    }
    std::vector<std::size_t> tp_prefix(n);
    std::vector<double> loc_prefix(n);
    std::size_t tp = 0;
    double loc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = indices[k];
      if (matches.assignment[i] >= 0) {
        ++tp;
        loc += LocError(matches.iou[i], tau);
      }
      tp_prefix[k] = tp;
      loc_prefix[k] = loc;
    }
    auto lrp_of_prefix = [&](std::size_t kept) {
      return LrpFromCounts(tp_prefix[kept - 1], kept, n_obj, loc_prefix[kept - 1]).lrp;
    };

    // Ascending thresholds: 0 keeps everything, then each distinct score from
    // the lowest up. '<=' sends ties to the larger threshold.
    OptimalThreshold best{0.0, lrp_of_prefix(n)};
    for (std::size_t end = n; end > 0;) {
      const double score = dets[indices[end - 1]].score;
      const double value = lrp_of_prefix(end);
      if (value <= *best.lrp) best = OptimalThreshold{score, value};
      while (end > 0 && dets[indices[end - 1]].score == score) --end;
    }
    out[cls] = best;
  }
  return out;
}

ClassThresholds ThresholdsOnly(const std::map<ClassId, OptimalThreshold>& choice) {
  ClassThresholds out;
  for (const auto& [cls, c] : choice) out[cls] = c.threshold;
  return out;
}

}  // namespace detcal
