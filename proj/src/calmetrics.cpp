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
#include "detcal/calmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "detcal/error.hpp"
#include "detcal/simd/kernels.hpp"

namespace detcal {
namespace {

void RequireBins(int bins) {
  if (bins < 1) throw ValidationError("number of bins must be at least 1");
}

void RequireMatches(const Dataset& dataset, const MatchResult& matches) {
  if (matches.assignment.size() != dataset.detections().size() ||
      matches.iou.size() != dataset.detections().size()) {
    throw ValidationError("matches do not belong to this dataset");
  }
}

void RequirePositiveTau(const MatchResult& matches, const char* measure) {
  if (!(matches.tau > 0.0)) {
    throw ValidationError(std::string(measure) + " requires matches at tau > 0");
  }
}

void RequireZeroTau(const MatchResult& matches, const char* measure) {
  if (matches.tau != 0.0) throw ValidationError(std::string(measure) + " requires matches at tau = 0");
}

// Dense bins over the given detections, accumulated in the given order.
std::vector<BinStats> Accumulate(const Dataset& dataset, const MatchResult& matches,
                                 const std::vector<std::size_t>& indices, int bins) {
  std::vector<BinStats> dense(static_cast<std::size_t>(bins));
  for (int j = 0; j < bins; ++j) dense[static_cast<std::size_t>(j)].index = j;
  const auto& dets = dataset.detections();
  for (std::size_t i : indices) {
    BinStats& b = dense[static_cast<std::size_t>(BinIndex(dets[i].score, bins))];
    ++b.count;
    b.confidence_sum += dets[i].score;
    if (matches.assignment[i] >= 0) {
      ++b.tp_count;
      b.tp_iou_sum += matches.iou[i];
    }
  }
  return dense;
}

enum class Target { kPrecision, kPrecisionTimesTpIou, kMeanIou };

double TargetOf(const BinStats& b, Target target) {
  switch (target) {
    case Target::kPrecision:
      return b.Precision();
    case Target::kPrecisionTimesTpIou:
      return b.Precision() * b.MeanTpIou();
    case Target::kMeanIou:
      return b.MeanIou();
  }
  return 0.0;
}

// Fills targets and errors, drops empty bins and returns the weighted error
// sum_j (n_j / n) |mean_conf_j - target_j|, summed in ascending bin order.
double Finalize(std::vector<BinStats>& dense, std::size_t total, Target target) {
  double value = 0.0;
  std::vector<BinStats> occupied;
  for (BinStats& b : dense) {
    if (b.count == 0) continue;
    b.target = TargetOf(b, target);
    b.error = std::abs(b.MeanConfidence() - b.target);
    value += static_cast<double>(b.count) / static_cast<double>(total) * b.error;
    occupied.push_back(b);
  }
  dense = std::move(occupied);
  return value;
}

std::vector<std::size_t> AllIndices(const Dataset& dataset) {
  std::vector<std::size_t> all(dataset.detections().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

// Shared shape of the binned class-wise measures.
CalibrationReport Binned(const Dataset& dataset, const MatchResult& matches, int bins,
                         CalibrationMeasure measure, Target target) {
  CalibrationReport report;
  report.measure = measure;
  report.tau = matches.tau;
  report.bin_count = bins;
  double sum = 0.0;
  for (const auto& [cls, indices] : DetectionsByClass(dataset)) {
    if (indices.empty()) continue;
    ClassCalibration cc;
    cc.class_id = cls;
    cc.detections = indices.size();
    cc.bins = Accumulate(dataset, matches, indices, bins);
    cc.value = Finalize(cc.bins, indices.size(), target);
    sum += cc.value;
    report.per_class.push_back(std::move(cc));
  }
  if (report.per_class.empty()) throw EvaluationError("no detections");
  report.value = sum / static_cast<double>(report.per_class.size());
  report.bins = Accumulate(dataset, matches, AllIndices(dataset), bins);
  Finalize(report.bins, dataset.detections().size(), target);
  return report;
}

}  // namespace

std::string ToString(CalibrationMeasure measure) {
  switch (measure) {
    case CalibrationMeasure::kDEce:
      return "d_ece";
    case CalibrationMeasure::kLaEce:
      return "la_ece";
    case CalibrationMeasure::kLaEce0:
      return "la_ece0";
    case CalibrationMeasure::kLaAce0:
      return "la_ace0";
    case CalibrationMeasure::kCocoDEce:
      return "coco_d_ece";
    case CalibrationMeasure::kKernelCe:
      return "kernel_ce";
  }
  return "unknown";
}

int BinIndex(double confidence, int bins) {
  const double scaled = std::floor(confidence * static_cast<double>(bins));
  if (!(scaled >= 0.0)) return 0;
  return static_cast<int>(std::min(scaled, static_cast<double>(bins - 1)));
}

CalibrationReport DEce(const Dataset& dataset, const MatchResult& matches, int bins) {
  RequireBins(bins);
  RequireMatches(dataset, matches);
  RequirePositiveTau(matches, "D-ECE");
  if (dataset.detections().empty()) throw EvaluationError("no detections");

  CalibrationReport report;
  report.measure = CalibrationMeasure::kDEce;
  report.tau = matches.tau;
  report.bin_count = bins;
  report.bins = Accumulate(dataset, matches, AllIndices(dataset), bins);
  report.value = Finalize(report.bins, dataset.detections().size(), Target::kPrecision);
  for (const auto& [cls, indices] : DetectionsByClass(dataset)) {
    if (indices.empty()) continue;
    ClassCalibration cc;
    cc.class_id = cls;
    cc.detections = indices.size();
    cc.bins = Accumulate(dataset, matches, indices, bins);
    cc.value = Finalize(cc.bins, indices.size(), Target::kPrecision);
    report.per_class.push_back(std::move(cc));
  }
  return report;
}

double DEceBinReduction(const Dataset& dataset, const MatchResult& matches, int bins) {
  RequireBins(bins);
  RequireMatches(dataset, matches);
  const auto& dets = dataset.detections();
  if (dets.empty()) throw EvaluationError("no detections");
  std::vector<double> signed_error(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const double p = dets[i].score;
    signed_error[static_cast<std::size_t>(BinIndex(p, bins))] += matches.assignment[i] >= 0 ? p - 1.0 : p;
  }
  double total = 0.0;
  for (double e : signed_error) total += std::abs(e);
  return total / static_cast<double>(dets.size());
}

CalibrationReport LaEce(const Dataset& dataset, const MatchResult& matches, int bins) {
  RequireBins(bins);
  RequireMatches(dataset, matches);
  RequirePositiveTau(matches, "LaECE");
  return Binned(dataset, matches, bins, CalibrationMeasure::kLaEce, Target::kPrecisionTimesTpIou);
}

CalibrationReport LaEce0(const Dataset& dataset, const MatchResult& matches, int bins) {
  RequireBins(bins);
  RequireMatches(dataset, matches);
  RequireZeroTau(matches, "LaECE0");
  return Binned(dataset, matches, bins, CalibrationMeasure::kLaEce0, Target::kMeanIou);
}

CalibrationReport LaAce0(const Dataset& dataset, const MatchResult& matches) {
  RequireMatches(dataset, matches);
  RequireZeroTau(matches, "LaACE0");
  const auto& dets = dataset.detections();
  CalibrationReport report;
  report.measure = CalibrationMeasure::kLaAce0;
  double sum = 0.0;
  for (const auto& [cls, indices] : DetectionsByClass(dataset)) {
    if (indices.empty()) continue;
    double gap = 0.0;
    for (std::size_t i : indices) gap += std::abs(dets[i].score - matches.iou[i]);
    ClassCalibration cc;
    cc.class_id = cls;
    cc.detections = indices.size();
    cc.value = gap / static_cast<double>(indices.size());
    sum += cc.value;
    report.per_class.push_back(std::move(cc));
  }
  if (report.per_class.empty()) throw EvaluationError("no detections");
  report.value = sum / static_cast<double>(report.per_class.size());
  return report;
}

CalibrationReport CocoStyleDEce(const Dataset& dataset, std::span<const double> taus, int bins) {
  if (taus.empty()) throw ValidationError("COCO-style D-ECE needs at least one tau");
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("COCO-style D-ECE taus must lie in (0, 1)");
  }
  CalibrationReport report;
  report.measure = CalibrationMeasure::kCocoDEce;
  report.bin_count = bins;
  std::map<ClassId, ClassCalibration> classes;
  for (double tau : taus) {
    const CalibrationReport one = DEce(dataset, Match(dataset, tau), bins);
    report.value += one.value;
    for (const ClassCalibration& cc : one.per_class) {
      ClassCalibration& acc = classes[cc.class_id];
      acc.class_id = cc.class_id;
      acc.detections = cc.detections;
      acc.value += cc.value;
    }
  }
  const double k = static_cast<double>(taus.size());
  report.value /= k;
  for (auto& [cls, cc] : classes) {
    cc.value /= k;
    report.per_class.push_back(cc);
  }
  return report;
}

CalibrationReport KernelCe(const Dataset& dataset, const MatchResult& matches, KernelLink link,
                           double bandwidth) {
  RequireMatches(dataset, matches);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ValidationError("kernel bandwidth must be positive");
  }
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const auto& dets = dataset.detections();

  CalibrationReport report;
  report.measure = CalibrationMeasure::kKernelCe;
  report.tau = matches.tau;
  double sum = 0.0;
  std::vector<double> conf;
  std::vector<double> value;
  for (const auto& [cls, indices] : DetectionsByClass(dataset)) {
    const std::size_t n = indices.size();
    if (n < 2) continue;
    conf.resize(n);
    value.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = indices[k];
      conf[k] = dets[i].score;
      value[k] = link == KernelLink::kIou ? matches.iou[i] : (matches.assignment[i] >= 0 ? 1.0 : 0.0);
    }
    const std::span<const double> cs(conf);
    const std::span<const double> vs(value);
    double gap = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      // Leave-one-out: the ranges before and after k. Weights are scaled by
      // the largest one so they cannot all underflow.
      const auto before_c = cs.first(k);
      const auto after_c = cs.subspan(k + 1);
      const double ref = std::min(simd::MinSqDistance(conf[k], before_c),
                                  simd::MinSqDistance(conf[k], after_c));
      const auto lo = simd::GaussianWeightedMoments(conf[k], before_c, vs.first(k), inv_two_h2, ref);
      const auto hi = simd::GaussianWeightedMoments(conf[k], after_c, vs.subspan(k + 1), inv_two_h2, ref);
      const double mean = (lo.weighted_value_sum + hi.weighted_value_sum) / (lo.weight_sum + hi.weight_sum);
      gap += std::abs(conf[k] - mean);
    }
    ClassCalibration cc;
    cc.class_id = cls;
    cc.detections = n;
    cc.value = gap / static_cast<double>(n);
    sum += cc.value;
    report.per_class.push_back(std::move(cc));
  }
  if (report.per_class.empty()) throw EvaluationError("kernel CE needs a class with at least two detections");
  report.value = sum / static_cast<double>(report.per_class.size());
  return report;
}

std::vector<ReliabilityRow> ReliabilityData(const CalibrationReport& report) {
  std::vector<ReliabilityRow> rows;
  const double j = static_cast<double>(report.bin_count);
  for (const BinStats& b : report.bins) {
    if (b.count == 0) continue;
    rows.push_back(ReliabilityRow{static_cast<double>(b.index) / j, static_cast<double>(b.index + 1) / j,
                                  b.count, b.MeanConfidence(), b.target});
  }
  return rows;
}

void WriteReliabilityCsv(std::ostream& out, std::span<const ReliabilityRow> rows) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << "bin_low,bin_high,count,mean_conf,target\n";
  out << std::setprecision(17);
  for (const ReliabilityRow& r : rows) {
    out << r.bin_low << ',' << r.bin_high << ',' << r.count << ',' << r.mean_confidence << ','
        << r.target << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace detcal
