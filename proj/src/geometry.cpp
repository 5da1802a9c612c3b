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

#include "lesionkit/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace lesionkit {

std::vector<AnchorTemplate> default_anchor_templates() {
  std::vector<AnchorTemplate> t;
  for (double scale : {48.0, 72.0, 96.0}) {
    for (double ratio : {1.0, 0.5, 2.0}) t.push_back({scale, ratio});
  }
  return t;
}

std::vector<Anchor> generate_anchors(int feature_rows, int feature_cols, double stride,
                                     std::span<const AnchorTemplate> templates) {
  if (feature_rows < 1 || feature_cols < 1) throw ValidationError("feature grid must be at least 1x1");
  if (!(stride > 0)) throw ValidationError("stride must be positive");
  const auto defaults = default_anchor_templates();
  if (templates.empty()) templates = defaults;
  std::vector<Anchor> anchors;
  anchors.reserve(static_cast<std::size_t>(feature_rows) * feature_cols * templates.size());
  for (int r = 0; r < feature_rows; ++r) {
    for (int c = 0; c < feature_cols; ++c) {
      for (std::size_t t = 0; t < templates.size(); ++t) {
        anchors.push_back({(c + 0.5) * stride, (r + 0.5) * stride, templates[t].width(), templates[t].height(), r, c,
                           static_cast<int>(t)});
      }
    }
  }
  return anchors;
}

std::vector<AnchorAssignment> assign_anchors(std::span<const Anchor> anchors, std::span<const BoundingBox> gt_boxes,
                                             const AssignOptions& options) {
  std::vector<AnchorAssignment> out(anchors.size());
  std::vector<bool> inside(anchors.size(), true);
  if (options.image_extent) {
    const auto [w, h] = *options.image_extent;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const auto b = anchors[i].box();
      inside[i] = b.left_x >= 0 && b.top_y >= 0 && b.right() <= w && b.bottom() <= h;
    }
  }
  if (gt_boxes.empty()) {
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (!inside[i]) out[i].label = AnchorLabel::kIgnore;
    }
    return out;
  }

  std::vector<double> gt_best(gt_boxes.size(), 0.0);
  std::vector<double> overlaps(anchors.size() * gt_boxes.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto b = anchors[i].box();
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      const double v = iou(b, gt_boxes[g]);
      overlaps[i * gt_boxes.size() + g] = v;
      if (v > out[i].max_iou) {
        out[i].max_iou = v;
        out[i].gt_index = static_cast<int>(g);
      }
      if (inside[i]) gt_best[g] = std::max(gt_best[g], v);
    }
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    auto& a = out[i];
    if (!inside[i]) {
      a.label = AnchorLabel::kIgnore;
      continue;
    }
    bool best_for_some_gt = false;
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      if (gt_best[g] > 0 && overlaps[i * gt_boxes.size() + g] == gt_best[g]) best_for_some_gt = true;
    }
    if (a.max_iou >= options.pos_iou || best_for_some_gt) {
      a.label = AnchorLabel::kPositive;
    } else if (a.max_iou <= options.neg_iou) {
      a.label = AnchorLabel::kNegative;
      a.gt_index = -1;
    } else {
      a.label = AnchorLabel::kIgnore;
    }
  }
  return out;
}

std::vector<PoolBin> roi_pool_bins(const BoundingBox& box, double feature_stride, int grid,
                                   std::optional<std::pair<int, int>> feature_shape) {
  if (grid < 1) throw ValidationError("pooling grid must be positive");
  if (!(feature_stride > 0)) throw ValidationError("feature stride must be positive");
  int x0 = static_cast<int>(std::floor(box.left_x / feature_stride));
  int y0 = static_cast<int>(std::floor(box.top_y / feature_stride));
  int x1 = static_cast<int>(std::ceil(box.right() / feature_stride));
  int y1 = static_cast<int>(std::ceil(box.bottom() / feature_stride));
  if (feature_shape) {
    const auto [rows, cols] = *feature_shape;
    x0 = std::clamp(x0, 0, cols);
    x1 = std::clamp(x1, 0, cols);
    y0 = std::clamp(y0, 0, rows);
    y1 = std::clamp(y1, 0, rows);
  }
  const int w = x1 - x0;
  const int h = y1 - y0;
  if (w <= 0 || h <= 0) throw ValidationError("RoI is empty on the feature map");

  auto lo = [grid](int i, int extent) { return (i * extent) / grid; };
  auto hi = [grid](int i, int extent) { return ((i + 1) * extent + grid - 1) / grid; };
  std::vector<PoolBin> bins;
  bins.reserve(static_cast<std::size_t>(grid * grid));
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      bins.push_back({y0 + lo(i, h), y0 + hi(i, h), x0 + lo(j, w), x0 + hi(j, w)});
    }
  }
  return bins;
}

std::vector<std::size_t> nms_indices(std::span<const BoundingBox> boxes, std::span<const double> scores,
                                     double iou_threshold, std::size_t max_keep) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> keep;
  std::vector<bool> removed(boxes.size(), false);
  for (std::size_t oi = 0; oi < order.size() && keep.size() < max_keep; ++oi) {
    const auto i = order[oi];
    if (removed[i]) continue;
    keep.push_back(i);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const auto j = order[oj];
      if (!removed[j] && iou(boxes[i], boxes[j]) > iou_threshold) removed[j] = true;
    }
  }
  return keep;
}

std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold, bool class_wise) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });
  std::vector<Detection> keep;
  std::vector<bool> removed(detections.size(), false);
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const auto& d = detections[order[oi]];
    if (removed[order[oi]]) continue;
    keep.push_back(d);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const auto j = order[oj];
      if (removed[j]) continue;
      if (class_wise && detections[j].class_index != d.class_index) continue;
      if (iou(d.box, detections[j].box) > iou_threshold) removed[j] = true;
    }
  }
  return keep;
}

std::vector<Detection> select_detections(std::span<const Detection> detections, int max_count, double min_score) {
  std::vector<Detection> out;
  for (const auto& d : detections) {
    if (d.score > min_score) out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.left_x != b.box.left_x) return a.box.left_x < b.box.left_x;
    return a.box.top_y < b.box.top_y;
  });
  if (out.size() > static_cast<std::size_t>(std::max(0, max_count))) out.resize(static_cast<std::size_t>(max_count));
  return out;
}

}  // namespace lesionkit
