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
#include "detcal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "detcal/error.hpp"

namespace detcal {
namespace {

using nlohmann::json;

std::string Where(const std::string& source, const std::string& what, std::size_t index) {
  std::ostringstream os;
  os << source << ": " << what << " " << index;
  return os.str();
}

const json& RequireArray(const json& doc, const char* key, const std::string& source) {
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_array()) {
    throw ValidationError(source + ": missing array \"" + key + "\"");
  }
  return doc.at(key);
}

std::int64_t RequireInteger(const json& record, const char* key, const std::string& where) {
  if (!record.is_object() || !record.contains(key) || !record.at(key).is_number_integer()) {
    throw ValidationError(where + ": field \"" + key + "\" must be an integer");
  }
  return record.at(key).get<std::int64_t>();
}

double RequireNumber(const json& record, const char* key, const std::string& where) {
  if (!record.contains(key) || !record.at(key).is_number()) {
    throw ValidationError(where + ": field \"" + key + "\" must be a number");
  }
  return record.at(key).get<double>();
}

BBox RequireBox(const json& record, const std::string& where) {
  if (!record.contains("bbox") || !record.at("bbox").is_array() || record.at("bbox").size() != 4) {
    throw ValidationError(where + ": \"bbox\" must be an array [x, y, w, h]");
  }
  const json& b = record.at("bbox");
  std::array<double, 4> v{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (!b[k].is_number()) throw ValidationError(where + ": bbox entries must be numbers");
    v[k] = b[k].get<double>();
    if (!std::isfinite(v[k])) throw ValidationError(where + ": bbox entries must be finite");
  }
  if (v[2] < 0.0 || v[3] < 0.0) {
    throw ValidationError(where + ": bbox width and height must be non-negative");
  }
  return BBox::FromXywh(v[0], v[1], v[2], v[3]);
}

Detection ParseDetection(const json& record, const std::string& where) {
  if (!record.is_object()) throw ValidationError(where + ": expected an object");
  Detection det;
  det.image_id = RequireInteger(record, "image_id", where);
  det.category_id = RequireInteger(record, "category_id", where);
  det.box = RequireBox(record, where);
  det.score = RequireNumber(record, "score", where);
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    std::ostringstream os;
    os << where << ": score " << det.score << " outside [0, 1]";
    throw ValidationError(os.str());
  }
  return det;
}

json BoxToJson(const BBox& box) {
  const auto xywh = box.ToXywh();
  return json::array({xywh[0], xywh[1], xywh[2], xywh[3]});
}

// Uniform integer in [0, bound] by rejection; independent of the standard
// library's distribution implementations so splits agree across platforms.
std::uint64_t UniformUpTo(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t range = bound + 1;
  const std::uint64_t limit = range == 0 ? 0 : (~std::uint64_t{0} / range) * range;
  while (true) {
    const std::uint64_t draw = rng();
    if (range == 0) return draw;
    if (draw < limit) return draw % range;
  }
}

}  // namespace

void SortCanonical(std::vector<Detection>& detections) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
}

Dataset Dataset::Create(std::vector<Category> categories,
                        std::vector<GroundTruthObject> ground_truth,
                        std::vector<Detection> detections, std::set<ImageId> image_ids) {
  std::set<ClassId> seen;
  for (const Category& c : categories) {
    if (!seen.insert(c.id).second) {
      throw ValidationError("duplicate category id " + std::to_string(c.id));
    }
  }
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const GroundTruthObject& g = ground_truth[i];
    if (!seen.count(g.category_id)) throw ValidationError(Where("dataset", "unknown category in object", i));
    if (!image_ids.count(g.image_id)) throw ValidationError(Where("dataset", "unknown image in object", i));
    if (!g.box.IsValid()) throw ValidationError(Where("dataset", "invalid box in object", i));
  }
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    if (!seen.count(d.category_id)) throw ValidationError(Where("dataset", "unknown category in detection", i));
    if (!image_ids.count(d.image_id)) throw ValidationError(Where("dataset", "unknown image in detection", i));
    if (!d.box.IsValid()) throw ValidationError(Where("dataset", "invalid box in detection", i));
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw ValidationError(Where("dataset", "score outside [0, 1] in detection", i));
  }
  Dataset out;
  out.categories_ = std::move(categories);
  out.ground_truth_ = std::move(ground_truth);
  out.detections_ = std::move(detections);
  out.image_ids_ = std::move(image_ids);
  SortCanonical(out.detections_);
  return out;
}

bool Dataset::HasCategory(ClassId id) const {
  return std::any_of(categories_.begin(), categories_.end(),
                     [id](const Category& c) { return c.id == id; });
}

std::vector<ClassId> Dataset::ClassIds() const {
  std::vector<ClassId> ids;
  ids.reserve(categories_.size());
  for (const Category& c : categories_) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Dataset Dataset::WithDetections(std::vector<Detection> detections) const {
  return Create(categories_, ground_truth_, std::move(detections), image_ids_);
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream os;
    os << path.string() << ":" << line << ":" << column << ": JSON parse error: " << e.what();
    throw ValidationError(os.str());
  }
}

void WriteJsonFile(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw Error(path.string() + ": write failed");
}

Dataset GroundTruthFromJson(const json& doc, const std::string& source) {
  if (!doc.is_object()) throw ValidationError(source + ": expected a JSON object");
  const json& images = RequireArray(doc, "images", source);
  const json& annotations = RequireArray(doc, "annotations", source);
  const json& categories = RequireArray(doc, "categories", source);

  std::set<ImageId> image_ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    image_ids.insert(RequireInteger(images[i], "id", Where(source, "image", i)));
  }

  std::vector<Category> cats;
  std::set<ClassId> cat_ids;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string where = Where(source, "category", i);
    Category c;
    c.id = RequireInteger(categories[i], "id", where);
    if (categories[i].contains("name")) {
      if (!categories[i].at("name").is_string()) {
        throw ValidationError(where + ": field \"name\" must be a string");
      }
      c.name = categories[i].at("name").get<std::string>();
    }
    if (!cat_ids.insert(c.id).second) {
      throw ValidationError(where + ": duplicate category id " + std::to_string(c.id));
    }
    cats.push_back(std::move(c));
  }

  std::vector<GroundTruthObject> objects;
  objects.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = Where(source, "annotation", i);
    const json& a = annotations[i];
    if (!a.is_object()) throw ValidationError(where + ": expected an object");
    GroundTruthObject g;
    g.image_id = RequireInteger(a, "image_id", where);
    g.category_id = RequireInteger(a, "category_id", where);
    g.box = RequireBox(a, where);
    if (!cat_ids.count(g.category_id)) {
      throw ValidationError(where + ": unknown category_id " + std::to_string(g.category_id));
    }
    if (!image_ids.count(g.image_id)) {
      throw ValidationError(where + ": unknown image_id " + std::to_string(g.image_id));
    }
    bool crowd = false;
    if (a.contains("iscrowd")) {
      const json& flag = a.at("iscrowd");
      crowd = flag.is_boolean() ? flag.get<bool>() : (flag.is_number() && flag.get<double>() != 0.0);
    }
    if (!crowd) objects.push_back(g);
  }
  return Dataset::Create(std::move(cats), std::move(objects), {}, std::move(image_ids));
}

Dataset LoadGroundTruth(const std::filesystem::path& path) {
  return GroundTruthFromJson(ReadJsonFile(path), path.string());
}

Dataset DetectionsFromJson(const json& doc, const Dataset& skeleton, const std::string& source) {
  if (!doc.is_array()) throw ValidationError(source + ": expected a JSON array of detections");
  std::vector<Detection> dets;
  dets.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = Where(source, "detection", i);
    Detection d = ParseDetection(doc[i], where);
    if (!skeleton.image_ids().count(d.image_id)) {
      throw ValidationError(where + ": unknown image_id " + std::to_string(d.image_id));
    }
    if (!skeleton.HasCategory(d.category_id)) {
      throw ValidationError(where + ": unknown category_id " + std::to_string(d.category_id));
    }
    dets.push_back(d);
  }
  return skeleton.WithDetections(std::move(dets));
}

Dataset LoadDetections(const std::filesystem::path& path, const Dataset& skeleton) {
  return DetectionsFromJson(ReadJsonFile(path), skeleton, path.string());
}

std::vector<Detection> ReadDetections(const std::filesystem::path& path) {
  const json doc = ReadJsonFile(path);
  const std::string source = path.string();
  if (!doc.is_array()) throw ValidationError(source + ": expected a JSON array of detections");
  std::vector<Detection> dets;
  dets.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    dets.push_back(ParseDetection(doc[i], Where(source, "detection", i)));
  }
  return dets;
}

Dataset DatasetFromDetections(std::vector<Detection> detections) {
  std::set<ImageId> images;
  std::set<ClassId> classes;
  for (const Detection& d : detections) {
    images.insert(d.image_id);
    classes.insert(d.category_id);
  }
  std::vector<Category> cats;
  for (ClassId id : classes) cats.push_back(Category{id, ""});
  return Dataset::Create(std::move(cats), {}, std::move(detections), std::move(images));
}

json GroundTruthToJson(const Dataset& dataset) {
  json images = json::array();
  for (ImageId id : dataset.image_ids()) images.push_back({{"id", id}});
  json annotations = json::array();
  std::int64_t next_id = 1;
  for (const GroundTruthObject& g : dataset.ground_truth()) {
    annotations.push_back({{"id", next_id++},
                           {"image_id", g.image_id},
                           {"category_id", g.category_id},
                           {"bbox", BoxToJson(g.box)},
                           {"area", g.box.Area()},
                           {"iscrowd", 0}});
  }
  json categories = json::array();
  for (const Category& c : dataset.categories()) {
    categories.push_back({{"id", c.id}, {"name", c.name}});
  }
  return json{{"images", images}, {"annotations", annotations}, {"categories", categories}};
}

json DetectionsToJson(const std::vector<Detection>& detections) {
  json out = json::array();
  for (const Detection& d : detections) {
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.category_id},
                   {"bbox", BoxToJson(d.box)},
                   {"score", d.score}});
  }
  return out;
}

void SaveGroundTruth(const Dataset& dataset, const std::filesystem::path& path) {
  WriteJsonFile(GroundTruthToJson(dataset), path);
}

void SaveDetections(const std::vector<Detection>& detections, const std::filesystem::path& path) {
  WriteJsonFile(DetectionsToJson(detections), path);
}

Dataset TopKPerImage(const Dataset& dataset, int k) {
  if (k < 1) throw ValidationError("top-k must be at least 1");
  std::unordered_map<ImageId, int> kept_per_image;
  std::vector<Detection> kept;
  for (const Detection& d : dataset.detections()) {
    int& count = kept_per_image[d.image_id];
    if (count < k) {
      kept.push_back(d);
      ++count;
    }
  }
  return dataset.WithDetections(std::move(kept));
}

Dataset ThresholdDetections(const Dataset& dataset, const ClassThresholds& thresholds) {
  std::vector<Detection> kept;
  for (const Detection& d : dataset.detections()) {
    const auto it = thresholds.find(d.category_id);
    const double cutoff = it == thresholds.end() ? 0.0 : it->second;
    if (d.score >= cutoff) kept.push_back(d);
  }
  return dataset.WithDetections(std::move(kept));
}

std::pair<Dataset, Dataset> Split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must lie in (0, 1)");
  const std::size_t n = dataset.image_ids().size();
  if (n < 2) throw ValidationError("split needs at least two images");

  std::vector<ImageId> order(dataset.image_ids().begin(), dataset.image_ids().end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[UniformUpTo(rng, i)]);
  }
  const auto first_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction)), 1, n - 1);
  const std::set<ImageId> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_count));
  const std::set<ImageId> second(order.begin() + static_cast<std::ptrdiff_t>(first_count), order.end());

  auto part = [&](const std::set<ImageId>& images) {
    std::vector<GroundTruthObject> gt;
    for (const GroundTruthObject& g : dataset.ground_truth()) {
      if (images.count(g.image_id)) gt.push_back(g);
    }
    std::vector<Detection> dets;
    for (const Detection& d : dataset.detections()) {
      if (images.count(d.image_id)) dets.push_back(d);
    }
    return Dataset::Create(dataset.categories(), std::move(gt), std::move(dets), images);
  };
  return {part(first), part(second)};
}

std::map<ClassId, std::vector<std::size_t>> DetectionsByClass(const Dataset& dataset) {
  std::map<ClassId, std::vector<std::size_t>> out;
  for (const Category& c : dataset.categories()) out[c.id];
  const auto& dets = dataset.detections();
  for (std::size_t i = 0; i < dets.size(); ++i) out[dets[i].category_id].push_back(i);
  return out;
}

std::map<ClassId, std::size_t> GroundTruthCountByClass(const Dataset& dataset) {
  std::map<ClassId, std::size_t> out;
  for (const Category& c : dataset.categories()) out[c.id] = 0;
  for (const GroundTruthObject& g : dataset.ground_truth()) ++out[g.category_id];
  return out;
}

}  // namespace detcal
