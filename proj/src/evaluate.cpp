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

#include "lesionkit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "lesionkit/csv.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

bool matches(double overlap, const MatchOptions& o) {
  return o.strict ? overlap > o.iou_threshold : overlap >= o.iou_threshold;
}

const Detection* top_detection(const std::vector<Detection>& dets) {
  const Detection* best = nullptr;
  for (const auto& d : dets) {
    if (!best || d.score > best->score) best = &d;
  }
  return best;
}

void check_images(const DetectionsByImage& detections, const GroundTruthByImage& gt) {
  for (const auto& [id, boxes] : gt) {
    if (boxes.size() != 1) {
      throw ValidationError("image '" + id + "' has " + std::to_string(boxes.size()) +
                            " gt boxes; top-1 evaluation needs exactly one");
    }
  }
  for (const auto& [id, dets] : detections) {
    if (!gt.contains(id)) throw ValidationError("detections for image '" + id + "' which has no ground truth");
  }
}

}  // namespace

double evaluate_top1(const DetectionsByImage& detections, const GroundTruthByImage& gt, const MatchOptions& options) {
  check_images(detections, gt);
  if (gt.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& [id, boxes] : gt) {
    const auto it = detections.find(id);
    if (it == detections.end()) continue;
    const Detection* top = top_detection(it->second);
    if (top && matches(iou(top->box, boxes.front().box), options)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gt.size());
}

std::vector<std::pair<double, double>> accuracy_curve(const DetectionsByImage& detections,
                                                      const GroundTruthByImage& gt,
                                                      std::span<const double> thresholds, bool strict) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw ValidationError("threshold grid must ascend");
  std::vector<std::pair<double, double>> curve;
  for (double t : thresholds) curve.emplace_back(t, evaluate_top1(detections, gt, {t, strict}));
  return curve;
}

std::vector<PrPoint> pr_curve(const DetectionsByImage& detections, const GroundTruthByImage& gt, int category,
                              const MatchOptions& options) {
  std::size_t total = 0;
  std::set<std::string> category_images;
  for (const auto& [id, boxes] : gt) {
    for (const auto& g : boxes) {
      if (g.category == category) {
        ++total;
        category_images.insert(id);
      }
    }
  }
  if (total == 0) throw ValidationError("category " + std::to_string(category) + " has no ground truth");

  struct Candidate {
    const std::string* image;
    const Detection* det;
  };
  std::vector<Candidate> pool;
  for (const auto& [id, dets] : detections) {
    const bool on_category_image = category_images.contains(id);
    for (const auto& d : dets) {
      if (d.class_index == category || on_category_image) pool.push_back({&id, &d});
    }
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate& a, const Candidate& b) { return a.det->score > b.det->score; });

  std::map<std::string, std::vector<bool>> used;
  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& c = pool[i];
    bool hit = false;
    if (c.det->class_index == category) {
      const auto git = gt.find(*c.image);
      if (git != gt.end()) {
        auto& flags = used[*c.image];
        flags.resize(git->second.size(), false);
        double best = -1;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < git->second.size(); ++j) {
          const auto& g = git->second[j];
          if (flags[j] || g.category != category) continue;
          const double v = iou(c.det->box, g.box);
          if (matches(v, options) && v > best) {
            best = v;
            best_j = j;
          }
        }
        if (best >= 0) {
          flags[best_j] = true;
          hit = true;
        }
      }
    }
    (hit ? tp : fp) += 1;
    const bool last_of_score = i + 1 == pool.size() || pool[i + 1].det->score != c.det->score;
    if (last_of_score) {
      curve.push_back({c.det->score, static_cast<double>(tp) / static_cast<double>(total),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
  }
  return curve;
}

EvalReport evaluate(const DetectionsByImage& detections, const GroundTruthByImage& gt, const EvalOptions& options) {
  EvalReport report;
  report.overall_top1_accuracy = evaluate_top1(detections, gt, options.match);
  report.iou_curve = accuracy_curve(detections, gt, options.iou_grid, options.match.strict);

  std::map<int, GroundTruthByImage> by_cluster;
  for (const auto& [id, boxes] : gt) {
    report.image_ids.push_back(id);
    by_cluster[boxes.front().category].emplace(id, boxes);
  }
  for (const auto& [cluster, subset] : by_cluster) {
    DetectionsByImage sub_dets;
    for (const auto& [id, boxes] : subset) {
      const auto it = detections.find(id);
      if (it != detections.end()) sub_dets.emplace(id, it->second);
    }
    report.per_cluster.push_back({cluster, subset.size(), evaluate_top1(sub_dets, subset, options.match)});
    report.pr_curves.emplace(cluster, pr_curve(detections, gt, cluster, options.match));
  }

  for (const auto& [id, dets] : detections) {
    const Detection* top = top_detection(dets);
    const auto& g = gt.at(id).front();
    for (const auto& d : dets) {
      if (&d != top && iou(d.box, g.box) <= 0.0) ++report.extra_detections;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

Table1 compare_configs(const EvalReport& single, const EvalReport& multi, const std::map<int, std::string>& names) {
  if (single.image_ids != multi.image_ids) throw ValidationError("reports were computed on different test images");
  if (single.per_cluster.size() != multi.per_cluster.size()) throw ValidationError("reports disagree on clusters");
  Table1 table;
  double ws = 0, wm = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < single.per_cluster.size(); ++i) {
    const auto& s = single.per_cluster[i];
    const auto& m = multi.per_cluster[i];
    if (s.cluster != m.cluster || s.size != m.size) throw ValidationError("reports disagree on cluster membership");
    const auto name = names.find(s.cluster);
    table.rows.push_back({std::to_string(s.cluster), name != names.end() ? name->second : "", s.size, s.accuracy,
                          m.accuracy});
    ws += s.accuracy * static_cast<double>(s.size);
    wm += m.accuracy * static_cast<double>(s.size);
    total += s.size;
  }
  table.overall = {"overall", "", total, total ? ws / static_cast<double>(total) : 0.0,
                   total ? wm / static_cast<double>(total) : 0.0};
  return table;
}

namespace {
std::string percent(double fraction) { return fmt::format("{:.2f}", fraction * 100.0); }
}  // namespace

void write_table1_csv(const Table1& table, std::ostream& out) {
  out << "cluster,size,acc_single,acc_multi\n";
  auto row = [&](const Table1Row& r) {
    out << csv::checked_field(r.cluster) << ',' << r.size << ',' << percent(r.acc_single) << ','
        << percent(r.acc_multi) << '\n';
  };
  for (const auto& r : table.rows) row(r);
  row(table.overall);
}

void write_table1_text(const Table1& table, std::ostream& out) {
  out << fmt::format("{:<8} {:<20} {:>6} {:>10} {:>10} {:>8}\n", "cluster", "category", "size", "w/o labels",
                     "w/ labels", "delta");
  auto row = [&](const Table1Row& r) {
    out << fmt::format("{:<8} {:<20} {:>6} {:>10} {:>10} {:>+8.2f}\n", r.cluster, r.name, r.size, percent(r.acc_single),
                       percent(r.acc_multi), (r.acc_multi - r.acc_single) * 100.0);
  };
  for (const auto& r : table.rows) row(r);
  row(table.overall);
}

Table1 read_table1_fixture(std::istream& in) {
  nlohmann::json j;
  EvalReport single, multi;
  std::map<int, std::string> names;
  Table1Row published;
  try {
    in >> j;
    for (const auto& c : j.at("clusters")) {
      const int id = c.at("id").get<int>();
      const auto size = c.at("size").get<std::size_t>();
      single.per_cluster.push_back({id, size, c.at("acc_single").get<double>() / 100.0});
      multi.per_cluster.push_back({id, size, c.at("acc_multi").get<double>() / 100.0});
      names[id] = c.value("name", "");
    }
    const auto& o = j.at("overall");
    published = {"overall", "", o.at("size").get<std::size_t>(), o.at("acc_single").get<double>() / 100.0,
                 o.at("acc_multi").get<double>() / 100.0};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad table fixture: ") + e.what());
  }
  Table1 t = compare_configs(single, multi, names);
  // Published overall values were computed on the full test set, not from
  // the rounded per-cluster numbers, so they are carried over verbatim.
  t.overall = published;
  return t;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kDetectionHeader = "image_id,class_index,score,left_x,top_y,width,height";
}

void write_detections(const DetectionsByImage& detections, std::ostream& out) {
  out << kDetectionHeader << '\n';
  for (const auto& [id, dets] : detections) {
    for (const auto& d : dets) {
      out << csv::checked_field(id) << ',' << d.class_index << ',' << csv::number(d.score) << ','
          << csv::number(d.box.left_x) << ',' << csv::number(d.box.top_y) << ',' << csv::number(d.box.width) << ','
          << csv::number(d.box.height) << '\n';
    }
  }
}

DetectionsByImage read_detections(std::istream& in) {
  DetectionsByImage out;
  for (const auto& f : csv::read_table(in, kDetectionHeader)) {
    Detection d;
    d.class_index = static_cast<int>(csv::to_int(f[1]));
    d.score = csv::to_double(f[2]);
    d.box = {csv::to_double(f[3]), csv::to_double(f[4]), csv::to_double(f[5]), csv::to_double(f[6])};
    out[f[0]].push_back(d);
  }
  return out;
}

void write_iou_curve(std::span<const std::pair<double, double>> curve, std::ostream& out) {
  out << "threshold,accuracy\n";
  for (const auto& [t, a] : curve) out << csv::number(t) << ',' << csv::number(a) << '\n';
}

void write_pr_curve(std::span<const PrPoint> curve, std::ostream& out) {
  out << "score,recall,precision\n";
  for (const auto& p : curve) out << csv::number(p.score) << ',' << csv::number(p.recall) << ',' << csv::number(p.precision) << '\n';
}

void write_per_cluster(std::span<const ClusterAccuracy> rows, std::ostream& out) {
  out << "cluster,size,accuracy\n";
  for (const auto& r : rows) out << r.cluster << ',' << r.size << ',' << csv::number(r.accuracy) << '\n';
}

std::vector<ClusterAccuracy> read_per_cluster(std::istream& in) {
  std::vector<ClusterAccuracy> rows;
  for (const auto& f : csv::read_table(in, "cluster,size,accuracy")) {
    rows.push_back({static_cast<int>(csv::to_int(f[0])), static_cast<std::size_t>(csv::to_int(f[1])),
                    csv::to_double(f[2])});
  }
  return rows;
}

}  // namespace lesionkit
