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

#include <cmath>

#include "detcal/error.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace detcal {
namespace {

using testing::MakeDataset;

TEST_CASE("a perfect detection has zero LRP") {
  const Dataset d = MakeDataset({{1, 1, {0, 0, 10, 10}}}, {{1, 1, {0, 0, 10, 10}, 0.9}});
  const LrpResult r = Lrp(d, Match(d, 0.5), 0.5);
  CHECK(r.lrp == 0.0);
  CHECK(r.defined);
}

TEST_CASE("no detections over three objects gives LRP one") {
  const Dataset d = MakeDataset({{1, 1, {0, 0, 1, 1}}, {1, 1, {5, 5, 6, 6}}, {2, 1, {0, 0, 1, 1}}}, {});
  const LrpResult r = Lrp(d, Match(d, 0.0), 0.0);
  CHECK(r.lrp == 1.0);
  CHECK(r.n_fn == 3);
  CHECK_FALSE(r.loc_defined);
}

TEST_CASE("one TP at IoU 0.6, one FP and one FN give LRP 0.8") {
  const Dataset d = MakeDataset({{1, 1, {0, 0, 10, 10}}, {1, 1, {50, 50, 60, 60}}},
                                {{1, 1, {0, 0, 6, 10}, 0.9}, {1, 1, {200, 200, 205, 205}, 0.5}});
  const LrpResult r = Lrp(d, Match(d, 0.0), 0.0);
  CHECK(r.lrp == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(r.lrp_loc == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(r.lrp_fp == 0.5);
  CHECK(r.lrp_fn == 0.5);
  CHECK(std::abs(LrpFromComponents(r) - r.lrp) < 1e-12);
}

TEST_CASE("LRP is undefined without detections and objects") {
  const LrpResult r = LrpFromCounts(0, 0, 0, 0.0);
  CHECK_FALSE(r.defined);
  CHECK(std::isnan(r.lrp));
}

TEST_CASE("LRP rejects matches computed at another tau") {
  const Dataset d = MakeDataset({}, {});
  CHECK_THROWS_AS(Lrp(d, Match(d, 0.5), 0.0), ValidationError);
}

TEST_CASE("LRP equals its definition and its component form on random scenes") {
  testing::Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset d = testing::RandomScene(rng, {}, testing::UniformScores());
    for (double tau : {0.0, 0.5}) {
      const LrpResult r = Lrp(d, Match(d, tau), tau);
      const testing::OracleMatch o = testing::GreedyMatchOracle(d, tau);
      std::size_t tp = 0;
      double loc = 0.0;
      for (std::size_t i = 0; i < o.iou.size(); ++i) {
        if (o.assignment[i] < 0) continue;
        ++tp;
        loc += (1.0 - o.iou[i]) / (1.0 - tau);
      }
      const std::size_t fp = d.detections().size() - tp;
      const std::size_t fn = d.ground_truth().size() - tp;
      CHECK(r.n_tp == tp);
      CHECK(std::abs(r.lrp - testing::LrpOracle(tp, fp, fn, loc)) < 1e-12);
      CHECK(std::abs(LrpFromComponents(r) - r.lrp) < 1e-12);
      CHECK(r.lrp >= 0.0);
      CHECK(r.lrp <= 1.0);
      if (tp == 0) CHECK(r.lrp == 1.0);
    }
  }
}

TEST_CASE("class LRP means skip classes without objects") {
  const Dataset d = MakeDataset({{1, 1, {0, 0, 10, 10}}}, {{1, 1, {0, 0, 10, 10}, 0.9}, {1, 2, {0, 0, 1, 1}, 0.5}}, 2);
  const ClassLrp c = LrpPerClass(d, Match(d, 0.0), 0.0);
  REQUIRE(c.mean.has_value());
  CHECK(c.mean->lrp == 0.0);
  CHECK(c.per_class.at(2).lrp == 1.0);
}

TEST_CASE("recall grid is linspace(0, 1, 101)") {
  const auto grid = RecallGrid();
  REQUIRE(grid.size() == 101);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(grid[50] == 0.5);
  CHECK(grid[7] == 7 * 0.01);
}

Dataset TpFpSequence(const std::vector<bool>& tp, std::size_t objects) {
  std::vector<GroundTruthObject> gt;
  for (std::size_t k = 0; k < objects; ++k) gt.push_back({1, 1, BBox::FromXywh(100.0 * k, 0, 10, 10)});
  std::vector<Detection> dets;
  std::size_t next = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    const double score = 1.0 - 0.1 * static_cast<double>(i);
    const BBox box = tp[i] ? gt[next++].box : BBox::FromXywh(5000, 0, 10, 10);
    dets.push_back({1, 1, box, score});
  }
  return MakeDataset(gt, dets);
}

TEST_CASE("AP of simple sequences") {
  const Dataset single = TpFpSequence({true}, 1);
  CHECK(AveragePrecision(single, Match(single, 0.5)).mean == 1.0);
  const Dataset fp = TpFpSequence({false}, 1);
  CHECK(AveragePrecision(fp, Match(fp, 0.5)).mean == 0.0);
}

TEST_CASE("AP of TP, FP, TP over two objects follows the 101-point envelope") {
  const Dataset d = TpFpSequence({true, false, true}, 2);
  const double ap = *AveragePrecision(d, Match(d, 0.5)).mean;
  // 51 grid points at precision 1, 50 at precision 2/3.
  const double expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
  CHECK(ap == doctest::Approx(expected).epsilon(1e-14));
  CHECK(ap == doctest::Approx(testing::ApOracle({true, false, true}, 2)).epsilon(1e-14));
}

TEST_CASE("AP agrees with the PR-curve oracle and ignores classes without objects") {
  testing::Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset d = testing::RandomScene(rng, {}, testing::UniformScores());
    const MatchResult m = Match(d, 0.5);
    const ApResult ap = AveragePrecision(d, m);
    const auto objects = GroundTruthCountByClass(d);
    for (const auto& [cls, indices] : DetectionsByClass(d)) {
      if (objects.at(cls) == 0) {
        CHECK(ap.per_class.count(cls) == 0);
        continue;
      }
      std::vector<bool> tps;
      for (std::size_t i : indices) tps.push_back(m.IsTruePositive(i));
      CHECK(std::abs(ap.per_class.at(cls) - testing::ApOracle(tps, objects.at(cls))) < 1e-12);
    }
  }
}

TEST_CASE("AP is invariant under strictly increasing score maps") {
  testing::Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const Dataset d = testing::RandomScene(rng, {}, testing::UniformScores());
    const Dataset g = testing::WithScores(d, [](std::size_t, const Detection& det) { return det.score * det.score; });
    const auto a = AveragePrecision(d, Match(d, 0.5));
    const auto b = AveragePrecision(g, Match(g, 0.5));
    CHECK(a.per_class == b.per_class);
  }
}

TEST_CASE("threshold search on hand-built classes") {
  SUBCASE("all TPs at IoU one keep everything") {
    const Dataset d = TpFpSequence({true, true, true}, 3);
    const auto t = LrpOptimalThresholds(d, 0.0).at(1);
    // Every candidate up to the lowest score ties at 0; the largest wins.
    CHECK(t.threshold == d.detections().back().score);
    CHECK(t.lrp == 0.0);
  }
  SUBCASE("TPs above and FPs below cut at the smallest TP score") {
    const Dataset d = TpFpSequence({true, true, false, false}, 2);
    const auto t = LrpOptimalThresholds(d, 0.0).at(1);
    CHECK(t.threshold == doctest::Approx(0.9));
    CHECK(t.threshold == d.detections()[1].score);
    CHECK(t.lrp == 0.0);
  }
  SUBCASE("a single FP is dropped when that lowers LRP") {
    const Dataset d = MakeDataset({{1, 1, {0, 0, 10, 10}}}, {{1, 1, {500, 500, 510, 510}, 0.4}});
    const auto t = LrpOptimalThresholds(d, 0.0).at(1);
    // Both candidates give LRP 1; the tie goes to the larger threshold.
    CHECK(t.threshold == 0.4);
    CHECK(t.lrp == 1.0);
  }
  SUBCASE("classes without detections get zero") {
    const Dataset d = MakeDataset({{1, 1, {0, 0, 10, 10}}}, {}, 2);
    const auto t = LrpOptimalThresholds(d, 0.0);
    CHECK(t.at(1).threshold == 0.0);
    CHECK(t.at(2).threshold == 0.0);
  }
}

TEST_CASE("threshold search matches the exhaustive sweep") {
  testing::Rng rng(34);
  testing::SceneSpec spec;
  spec.duplicate_rate = 0.3;
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = testing::RandomScene(rng, spec, testing::UniformScores());
    for (double tau : {0.0, 0.5}) {
      const auto found = LrpOptimalThresholds(d, tau);
      for (ClassId cls : d.ClassIds()) {
        const testing::SweepChoice oracle = testing::ExhaustiveThreshold(d, cls, tau);
        CHECK(found.at(cls).threshold == oracle.threshold);
        REQUIRE(found.at(cls).lrp.has_value() == oracle.lrp.has_value());
        if (oracle.lrp) CHECK(std::abs(*found.at(cls).lrp - *oracle.lrp) < 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace detcal
