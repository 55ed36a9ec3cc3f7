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
#include "detcal/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "detcal/error.hpp"
#include "detcal/matching.hpp"

namespace detcal {
namespace {

template <class Measure>
MetricValue Guarded(Measure&& measure, std::map<ClassId, double>* per_class) {
  MetricValue out;
  try {
    const CalibrationReport report = measure();
    out.value = report.value;
    if (per_class != nullptr) {
      for (const ClassCalibration& c : report.per_class) (*per_class)[c.class_id] = c.value;
    }
  } catch (const EvaluationError& e) {
    out.reason = e.what();
  }
  return out;
}

// Matching is the expensive step; reuse it across measures sharing a tau.
class MatchCache {
 public:
  explicit MatchCache(const Dataset& dataset) : dataset_(dataset) {}

  const MatchResult& At(double tau) {
    auto it = cache_.find(tau);
    if (it == cache_.end()) it = cache_.emplace(tau, Match(dataset_, tau)).first;
    return it->second;
  }

 private:
  const Dataset& dataset_;
  std::map<double, MatchResult> cache_;
};

void WriteCsvNumber(std::ostream& out, const std::optional<double>& value) {
  if (!value) return;
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", *value);
  out << buffer;
}

}  // namespace

EvaluationSummary Evaluate(const Dataset& dataset, const EvaluationOptions& options) {
  if (!(options.legacy_tau > 0.0 && options.legacy_tau < 1.0)) {
    throw ValidationError("legacy tau must lie in (0, 1)");
  }
  if (options.d_ece_bins < 1 || options.la_ece_bins < 1) throw ValidationError("bin counts must be positive");
  MatchCache matches(dataset);
  EvaluationSummary summary;
  summary.class_lrp = LrpPerClass(dataset, matches.At(options.tau), options.tau);
  summary.lrp = summary.class_lrp.mean;
  summary.ap = AveragePrecision(dataset, matches.At(options.legacy_tau));

  const MatchResult& legacy = matches.At(options.legacy_tau);
  const MatchResult& zero = matches.At(0.0);
  summary.d_ece = Guarded([&] { return DEce(dataset, legacy, options.d_ece_bins); }, nullptr);
  summary.la_ece =
      Guarded([&] { return LaEce(dataset, legacy, options.la_ece_bins); }, &summary.la_ece_per_class);
  summary.la_ece0 =
      Guarded([&] { return LaEce0(dataset, zero, options.la_ece_bins); }, &summary.la_ece0_per_class);
  summary.la_ace0 = Guarded([&] { return LaAce0(dataset, zero); }, &summary.la_ace0_per_class);
  return summary;
}

std::vector<double> SweepGrid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError("sweep step must lie in (0, 1]");
  const auto last = static_cast<long long>(std::floor(1.0 / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(last) + 2);
  for (long long i = 0; i <= last; ++i) grid.push_back(std::min(1.0, static_cast<double>(i) * step));
  if (grid.back() < 1.0) grid.push_back(1.0);
  return grid;
}

std::vector<SweepRow> ThresholdSweep(const Dataset& dataset, double step, const EvaluationOptions& options) {
  std::vector<SweepRow> rows;
  for (double t : SweepGrid(step)) {
    ClassThresholds thresholds;
    for (ClassId id : dataset.ClassIds()) thresholds[id] = t;
    const EvaluationSummary s = Evaluate(ThresholdDetections(dataset, thresholds), options);
    SweepRow row;
    row.threshold = t;
    row.d_ece = s.d_ece;
    row.la_ece = s.la_ece;
    row.la_ece0 = s.la_ece0;
    row.la_ace0 = s.la_ace0;
    if (s.lrp) row.lrp = s.lrp->lrp;
    row.ap = s.ap.mean;
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "threshold,d_ece,la_ece,la_ece0,la_ace0,lrp,ap\n";
  for (const SweepRow& row : rows) {
    WriteCsvNumber(out, row.threshold);
    for (const MetricValue* m : {&row.d_ece, &row.la_ece, &row.la_ece0, &row.la_ace0}) {
      out << ',';
      WriteCsvNumber(out, m->value);
    }
    out << ',';
    WriteCsvNumber(out, row.lrp);
    out << ',';
    WriteCsvNumber(out, row.ap);
    out << '\n';
  }
}

}  // namespace detcal
