// Copyright 2026 The lesionkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lesionkit/errors.hpp"
#include "lesionkit/evaluate.hpp"

using namespace lesionkit;

namespace {

const BoundingBox kGt{0, 0, 10, 10};

// Detection inside the gt box whose IoU equals `fraction` exactly.
Detection inner(double fraction, double score = 0.9, int cls = 1) {
  return {{0, 0, 10 * fraction, 10}, cls, score};
}

}  // namespace

TEST_CASE("top-1 accuracy is strict at the threshold") {
  GroundTruthByImage gt{{"a", {{kGt, 1}}}, {"b", {{kGt, 1}}}, {"c", {{kGt, 1}}}};
  DetectionsByImage d{{"a", {inner(0.6)}}, {"b", {inner(0.5)}}, {"c", {inner(0.4)}}};
  CHECK(evaluate_top1(d, gt) == doctest::Approx(1.0 / 3.0));
  MatchOptions loose;
  loose.strict = false;
  CHECK(evaluate_top1(d, gt, loose) == doctest::Approx(2.0 / 3.0));

  DetectionsByImage perfect{{"a", {{kGt, 1, 0.9}}}, {"b", {{kGt, 2, 0.9}}}, {"c", {{kGt, 1, 0.6}}}};
  CHECK(evaluate_top1(perfect, gt) == 1.0);
  CHECK(evaluate_top1({}, gt) == 0.0);

  // The highest-scoring box decides, not the best-overlapping one.
  DetectionsByImage order{{"a", {inner(0.3, 0.95), inner(1.0, 0.6)}}};
  GroundTruthByImage one{{"a", {{kGt, 1}}}};
  CHECK(evaluate_top1(order, one) == 0.0);
}

TEST_CASE("top-1 protocol errors") {
  GroundTruthByImage two{{"a", {{kGt, 1}, {{20, 20, 5, 5}, 1}}}};
  CHECK_THROWS_AS(evaluate_top1({}, two), ValidationError);
  GroundTruthByImage gt{{"a", {{kGt, 1}}}};
  DetectionsByImage stray{{"z", {inner(1.0)}}};
  CHECK_THROWS_AS(evaluate_top1(stray, gt), ValidationError);
}

TEST_CASE("accuracy curve over thresholds") {
  GroundTruthByImage gt;
  DetectionsByImage d;
  const double ious[4] = {0.2, 0.4, 0.6, 0.8};
  for (int i = 0; i < 4; ++i) {
    const std::string id = "img" + std::to_string(i);
    gt[id] = {{kGt, 1}};
    d[id] = {inner(ious[i])};
  }
  const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 0.9};
  const auto curve = accuracy_curve(d, gt, grid);
  const double expected[5] = {1.0, 0.75, 0.5, 0.25, 0.0};
  REQUIRE(curve.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(curve[static_cast<std::size_t>(i)].first == grid[static_cast<std::size_t>(i)]);
    CHECK(curve[static_cast<std::size_t>(i)].second == doctest::Approx(expected[i]));
  }
  const std::vector<double> zero{0.0};
  CHECK(accuracy_curve(d, gt, zero)[0].second == 1.0);
  const std::vector<double> one{1.0};
  CHECK(accuracy_curve(d, gt, one)[0].second == 0.0);
}

TEST_CASE("pr curve sweep") {
  GroundTruthByImage gt{{"a", {{kGt, 1}}}, {"b", {{kGt, 1}}}};
  DetectionsByImage d{{"a", {{kGt, 1, 0.9}}}, {"b", {{{50, 50, 10, 10}, 1, 0.8}, {kGt, 1, 0.7}}}};
  const auto pr = pr_curve(d, gt, 1);
  REQUIRE(pr.size() == 3);
  CHECK(pr[0].recall == doctest::Approx(0.5));
  CHECK(pr[0].precision == doctest::Approx(1.0));
  CHECK(pr[1].recall == doctest::Approx(0.5));
  CHECK(pr[1].precision == doctest::Approx(0.5));
  CHECK(pr[2].recall == doctest::Approx(1.0));
  CHECK(pr[2].precision == doctest::Approx(2.0 / 3.0));

  DetectionsByImage perfect{{"a", {{kGt, 1, 1.0}}}, {"b", {{kGt, 1, 1.0}}}};
  const auto p = pr_curve(perfect, gt, 1);
  REQUIRE(p.size() == 1);
  CHECK(p[0].recall == 1.0);
  CHECK(p[0].precision == 1.0);

  DetectionsByImage wrong{{"a", {{kGt, 2, 0.9}}}, {"b", {{kGt, 2, 0.8}}}};
  for (const auto& pt : pr_curve(wrong, gt, 1)) {
    CHECK(pt.recall == 0.0);
    CHECK(pt.precision == 0.0);
  }
  CHECK_THROWS_AS(pr_curve(d, gt, 3), ValidationError);
}

TEST_CASE("evaluate fills per-cluster rows") {
  GroundTruthByImage gt{{"a", {{kGt, 1}}}, {"b", {{kGt, 2}}}, {"c", {{kGt, 2}}}};
  DetectionsByImage d{{"a", {inner(1.0)}}, {"b", {inner(0.2)}}, {"c", {inner(0.9, 0.9, 2), {{60, 60, 5, 5}, 1, 0.7}}}};
  const auto r = evaluate(d, gt);
  CHECK(r.overall_top1_accuracy == doctest::Approx(2.0 / 3.0));
  REQUIRE(r.per_cluster.size() == 2);
  CHECK(r.per_cluster[0].cluster == 1);
  CHECK(r.per_cluster[0].accuracy == 1.0);
  CHECK(r.per_cluster[1].size == 2);
  CHECK(r.per_cluster[1].accuracy == 0.5);
  CHECK(r.extra_detections == 1);
  CHECK(r.iou_curve.size() == 9);
  CHECK(r.pr_curves.count(1) == 1);
  CHECK(r.pr_curves.count(2) == 1);
}

TEST_CASE("compare_configs") {
  GroundTruthByImage gt{{"a", {{kGt, 1}}}, {"b", {{kGt, 2}}}};
  DetectionsByImage d{{"a", {inner(1.0)}}, {"b", {inner(0.2)}}};
  const auto r = evaluate(d, gt);
  const auto t = compare_configs(r, r);
  for (const auto& row : t.rows) CHECK(row.acc_single == row.acc_multi);
  CHECK(t.overall.acc_multi - t.overall.acc_single == 0.0);
  CHECK(t.overall.size == 2);

  GroundTruthByImage other{{"a", {{kGt, 1}}}, {"z", {{kGt, 2}}}};
  const auto r2 = evaluate({}, other);
  CHECK_THROWS_AS(compare_configs(r, r2), ValidationError);
}

TEST_CASE("table fixture renders the golden csv") {
  std::ifstream fixture(LESIONKIT_TEST_DATA "/table1_published.json");
  std::ifstream golden(LESIONKIT_TEST_DATA "/table1_golden.csv");
  REQUIRE(fixture.good());
  REQUIRE(golden.good());
  std::stringstream rendered, expected;
  write_table1_csv(read_table1_fixture(fixture), rendered);
  expected << golden.rdbuf();
  CHECK(rendered.str() == expected.str());

  std::istringstream bad("{\"clusters\": 3}");
  CHECK_THROWS_AS(read_table1_fixture(bad), IoError);
}

TEST_CASE("csv surfaces round-trip") {
  DetectionsByImage d{{"a", {{{1.5, 2, 3, 4}, 2, 0.75}}}, {"b", {}}};
  std::stringstream io;
  write_detections(d, io);
  const auto back = read_detections(io);
  REQUIRE(back.count("a") == 1);
  CHECK(back.at("a")[0].box == BoundingBox{1.5, 2, 3, 4});
  CHECK(back.at("a")[0].class_index == 2);
  CHECK(back.at("a")[0].score == 0.75);

  const std::vector<ClusterAccuracy> rows{{1, 10, 0.5}, {2, 3, 1.0}};
  std::stringstream pc;
  write_per_cluster(rows, pc);
  const auto rows_back = read_per_cluster(pc);
  REQUIRE(rows_back.size() == 2);
  CHECK(rows_back[1].size == 3);
  CHECK(rows_back[0].accuracy == 0.5);
}
