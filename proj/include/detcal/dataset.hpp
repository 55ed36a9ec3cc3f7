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
#ifndef DETCAL_DATASET_HPP_
#define DETCAL_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "detcal/geometry.hpp"
#include "json.hpp"

namespace detcal {

using ImageId = std::int64_t;
using ClassId = std::int64_t;

struct Category {
  ClassId id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

struct GroundTruthObject {
  ImageId image_id = 0;
  ClassId category_id = 0;
  BBox box;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct Detection {
  ImageId image_id = 0;
  ClassId category_id = 0;
  BBox box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Per-class score cutoffs; classes without an entry use 0.
using ClassThresholds = std::map<ClassId, double>;

// Ground truth, detections and the category registry of one evaluation set.
//
// Invariants, established by the factory functions and preserved by every
// operation below:
//   - category ids are unique;
//   - every image id referenced by an object or detection is in image_ids;
//   - detections are in canonical order: descending score, ties in the order
//     the detections were supplied.
class Dataset {
 public:
  Dataset() = default;

  // Validates and canonicalizes. Throws ValidationError.
  static Dataset Create(std::vector<Category> categories,
                        std::vector<GroundTruthObject> ground_truth,
                        std::vector<Detection> detections,
                        std::set<ImageId> image_ids);

  const std::vector<Category>& categories() const { return categories_; }
  const std::vector<GroundTruthObject>& ground_truth() const { return ground_truth_; }
  const std::vector<Detection>& detections() const { return detections_; }
  const std::set<ImageId>& image_ids() const { return image_ids_; }

  bool HasCategory(ClassId id) const;
  // Ascending category ids.
  std::vector<ClassId> ClassIds() const;

  // Same ground truth and registry, different detections (re-canonicalized).
  Dataset WithDetections(std::vector<Detection> detections) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Category> categories_;
  std::vector<GroundTruthObject> ground_truth_;
  std::vector<Detection> detections_;
  std::set<ImageId> image_ids_;
};

// Stable sort by descending score.
void SortCanonical(std::vector<Detection>& detections);

// COCO annotation file -> registry, ground truth and images. Boxes are
// converted from [x, y, w, h]; "iscrowd": 1 annotations are dropped.
Dataset LoadGroundTruth(const std::filesystem::path& path);
Dataset GroundTruthFromJson(const nlohmann::json& doc, const std::string& source = "<json>");

// COCO results file (array of {image_id, category_id, bbox, score}) attached
// to the given skeleton; existing detections are replaced.
Dataset LoadDetections(const std::filesystem::path& path, const Dataset& skeleton);
Dataset DetectionsFromJson(const nlohmann::json& doc, const Dataset& skeleton,
                           const std::string& source = "<json>");

// Reads a results file with format and score checks only; no registry.
std::vector<Detection> ReadDetections(const std::filesystem::path& path);

// Dataset whose registry and images are inferred from the detections.
Dataset DatasetFromDetections(std::vector<Detection> detections);

nlohmann::json GroundTruthToJson(const Dataset& dataset);
nlohmann::json DetectionsToJson(const std::vector<Detection>& detections);
void SaveGroundTruth(const Dataset& dataset, const std::filesystem::path& path);
void SaveDetections(const std::vector<Detection>& detections, const std::filesystem::path& path);

// Parses a JSON file, reporting syntax errors with line and column.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const nlohmann::json& doc, const std::filesystem::path& path);

constexpr int kDefaultTopK = 100;

// Keeps at most k highest-scoring detections per image, across classes.
Dataset TopKPerImage(const Dataset& dataset, int k);

// Keeps detection i iff score_i >= thresholds[class_i] (default 0).
Dataset ThresholdDetections(const Dataset& dataset, const ClassThresholds& thresholds);

// Partitions images by a seeded shuffle. The first part receives
// clamp(floor(n * fraction), 1, n - 1) images.
std::pair<Dataset, Dataset> Split(const Dataset& dataset, double fraction, std::uint64_t seed);

// Detection indices per class, each list in canonical order. Every class of
// the registry has an entry.
std::map<ClassId, std::vector<std::size_t>> DetectionsByClass(const Dataset& dataset);
// Ground-truth object count per class; every registry class has an entry.
std::map<ClassId, std::size_t> GroundTruthCountByClass(const Dataset& dataset);

}  // namespace detcal

#endif  // DETCAL_DATASET_HPP_
