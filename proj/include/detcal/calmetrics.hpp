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
#ifndef DETCAL_CALMETRICS_HPP_
#define DETCAL_CALMETRICS_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "detcal/dataset.hpp"
#include "detcal/matching.hpp"

namespace detcal {

inline constexpr int kDefaultDEceBins = 10;
inline constexpr int kDefaultLaEceBins = 25;
inline constexpr double kDefaultKernelBandwidth = 0.05;

enum class CalibrationMeasure { kDEce, kLaEce, kLaEce0, kLaAce0, kCocoDEce, kKernelCe };

std::string ToString(CalibrationMeasure measure);

// Equal-width confidence bins, left-closed and right-open except the last,
// which is closed at 1.
int BinIndex(double confidence, int bins);

// Accumulated contents of one bin.
struct BinStats {
  int index = 0;
  std::size_t count = 0;
  double confidence_sum = 0.0;
  std::size_t tp_count = 0;
  double tp_iou_sum = 0.0;  // FPs contribute 0
  double target = 0.0;      // measure-specific accuracy target
  double error = 0.0;       // |mean_confidence - target|

  double MeanConfidence() const { return confidence_sum / static_cast<double>(count); }
  double Precision() const { return static_cast<double>(tp_count) / static_cast<double>(count); }
  // Mean IoU of the TPs in the bin (0 without TPs).
  double MeanTpIou() const { return tp_count ? tp_iou_sum / static_cast<double>(tp_count) : 0.0; }
  // Mean IoU over all detections in the bin, FPs counted as 0.
  double MeanIou() const { return tp_iou_sum / static_cast<double>(count); }
};

struct ClassCalibration {
  ClassId class_id = 0;
  std::size_t detections = 0;
  double value = 0.0;
  std::vector<BinStats> bins;  // occupied bins only, ascending
};

struct CalibrationReport {
  CalibrationMeasure measure = CalibrationMeasure::kLaEce0;
  double value = 0.0;
  // Classes with at least one detection (two for kernel CE), ascending id.
  std::vector<ClassCalibration> per_class;
  // Class-agnostic occupied bins, used for reliability diagrams.
  std::vector<BinStats> bins;
  double tau = 0.0;
  int bin_count = 0;
};

// Detection ECE: class-agnostic |mean confidence - precision| per bin.
// Requires matches at tau > 0. Throws EvaluationError without detections.
CalibrationReport DEce(const Dataset& dataset, const MatchResult& matches, int bins = kDefaultDEceBins);

// The same quantity through the per-bin reduction
// (1/N) sum_j |sum_TP (p - 1) + sum_FP p|.
double DEceBinReduction(const Dataset& dataset, const MatchResult& matches, int bins = kDefaultDEceBins);

// Localisation-aware ECE at tau > 0: class-wise target precision * mean TP IoU.
CalibrationReport LaEce(const Dataset& dataset, const MatchResult& matches, int bins = kDefaultLaEceBins);

// Localisation-aware ECE at tau = 0: class-wise target mean IoU with FPs as 0.
CalibrationReport LaEce0(const Dataset& dataset, const MatchResult& matches, int bins = kDefaultLaEceBins);

// Class-averaged mean |confidence - IoU| (matches at tau = 0).
CalibrationReport LaAce0(const Dataset& dataset, const MatchResult& matches);

// Mean D-ECE over a set of TP-validation thresholds, re-matching per tau.
CalibrationReport CocoStyleDEce(const Dataset& dataset, std::span<const double> taus,
                                int bins = kDefaultDEceBins);

enum class KernelLink { kIou, kTpIndicator };

// Kernel calibration error: per detection, |p_i - weighted mean of L_j| over
// the other detections j of the same class, Gaussian weights in confidence.
// Classes with fewer than two detections are skipped.
CalibrationReport KernelCe(const Dataset& dataset, const MatchResult& matches, KernelLink link,
                           double bandwidth = kDefaultKernelBandwidth);

struct ReliabilityRow {
  double bin_low = 0.0;
  double bin_high = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double target = 0.0;
};

// One row per occupied class-agnostic bin.
std::vector<ReliabilityRow> ReliabilityData(const CalibrationReport& report);
void WriteReliabilityCsv(std::ostream& out, std::span<const ReliabilityRow> rows);

}  // namespace detcal

#endif  // DETCAL_CALMETRICS_HPP_
