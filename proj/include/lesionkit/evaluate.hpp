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

#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lesionkit/box.hpp"
#include "lesionkit/geometry.hpp"

namespace lesionkit {

struct GroundTruth {
  BoundingBox box;
  int category{1};
};

using DetectionsByImage = std::map<std::string, std::vector<Detection>>;
using GroundTruthByImage = std::map<std::string, std::vector<GroundTruth>>;

struct MatchOptions {
  double iou_threshold{0.5};
  bool strict{true};  // correct iff IoU > threshold; otherwise >=
};

/// Class-agnostic top-1 accuracy: per image the highest-scoring detection
/// (misses count as wrong) is correct iff it overlaps the single gt box
/// beyond the threshold. Throws ValidationError on images with several gt
/// boxes or detections for images without gt.
double evaluate_top1(const DetectionsByImage& detections, const GroundTruthByImage& gt,
                     const MatchOptions& options = {});

/// Top-1 accuracy at each threshold of an ascending grid.
std::vector<std::pair<double, double>> accuracy_curve(const DetectionsByImage& detections,
                                                      const GroundTruthByImage& gt,
                                                      std::span<const double> thresholds, bool strict = true);

struct PrPoint {
  double score{0};
  double recall{0};
  double precision{0};
};

/// Precision/recall sweep for one category over all distinct scores,
/// descending. Considered detections are those labelled `category` plus any
/// detection on an image holding a gt of that category; a detection is a
/// true positive iff its class is `category` and it greedily matches an
/// unmatched gt of that category (highest score first, best IoU).
/// Throws ValidationError if the category has no gt.
std::vector<PrPoint> pr_curve(const DetectionsByImage& detections, const GroundTruthByImage& gt, int category,
                              const MatchOptions& options = {});

struct ClusterAccuracy {
  int cluster{0};
  std::size_t size{0};
  double accuracy{0};
};

struct EvalReport {
  double overall_top1_accuracy{0};
  std::vector<ClusterAccuracy> per_cluster;
  std::vector<std::pair<double, double>> iou_curve;
  std::map<int, std::vector<PrPoint>> pr_curves;
  /// Non-top-1 detections overlapping no gt; often unannotated findings.
  std::size_t extra_detections{0};
  std::vector<std::string> image_ids;
};

struct EvalOptions {
  MatchOptions match;
  std::vector<double> iou_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

EvalReport evaluate(const DetectionsByImage& detections, const GroundTruthByImage& gt,
                    const EvalOptions& options = {});

// ---------------------------------------------------------------------------
// Single-class vs multi-class comparison table

struct Table1Row {
  std::string cluster;  // id, or "overall"
  std::string name;
  std::size_t size{0};
  double acc_single{0};  // fraction in [0, 1]
  double acc_multi{0};
};

struct Table1 {
  std::vector<Table1Row> rows;
  Table1Row overall;
};

/// Per-cluster comparison; overall accuracies are the size-weighted means.
/// `names` maps cluster id to a free-text name. Throws ValidationError when
/// the two reports were computed on different images.
Table1 compare_configs(const EvalReport& single, const EvalReport& multi, const std::map<int, std::string>& names = {});

/// table1.csv: cluster,size,acc_single,acc_multi with percentages to two decimals.
void write_table1_csv(const Table1& table, std::ostream& out);
/// Readable layout with names and per-row deltas.
void write_table1_text(const Table1& table, std::ostream& out);
/// Table from stored per-cluster results. JSON: {"clusters": [{"id", "name",
/// "size", "acc_single", "acc_multi"}], "overall": {"size", "acc_single",
/// "acc_multi"}} with accuracies in percent. Rows go through compare_configs;
/// the stored overall row is kept as given. Throws IoError on bad JSON.
Table1 read_table1_fixture(std::istream& in);

// ---------------------------------------------------------------------------
// CSV surfaces

/// Detections CSV: image_id,class_index,score,left_x,top_y,width,height
void write_detections(const DetectionsByImage& detections, std::ostream& out);
DetectionsByImage read_detections(std::istream& in);

void write_iou_curve(std::span<const std::pair<double, double>> curve, std::ostream& out);
void write_pr_curve(std::span<const PrPoint> curve, std::ostream& out);
void write_per_cluster(std::span<const ClusterAccuracy> rows, std::ostream& out);
std::vector<ClusterAccuracy> read_per_cluster(std::istream& in);

}  // namespace lesionkit
