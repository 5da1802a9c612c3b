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

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lesionkit/box.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

// ---------------------------------------------------------------------------
// Anchors

/// Scale s and aspect ratio r = width:height; area is preserved at s^2.
struct AnchorTemplate {
  double scale{48};
  double ratio{1};
  double width() const { return scale * std::sqrt(ratio); }
  double height() const { return scale / std::sqrt(ratio); }
};

/// Scales (48, 72, 96) x ratios (1:1, 1:2, 2:1), scale-major order.
std::vector<AnchorTemplate> default_anchor_templates();

inline constexpr double kDefaultStride = 8.0;

struct Anchor {
  double center_x{0};
  double center_y{0};
  double width{0};
  double height{0};
  int row{0};
  int col{0};
  int template_index{0};

  BoundingBox box() const { return BoundingBox::from_center(center_x, center_y, width, height); }
};

/// Anchors ordered by (row, col, template). Centres sit at
/// ((col + 0.5) * stride, (row + 0.5) * stride).
std::vector<Anchor> generate_anchors(int feature_rows, int feature_cols, double stride = kDefaultStride,
                                     std::span<const AnchorTemplate> templates = {});

// ---------------------------------------------------------------------------
// Box regression

/// Centre/size offsets relative to a reference box: tx = (x - xa) / wa,
/// ty = (y - ya) / ha, tw = log(w / wa), th = log(h / ha).
template <typename Scalar>
struct BoxDelta {
  Scalar tx{0};
  Scalar ty{0};
  Scalar tw{0};
  Scalar th{0};
};

/// Log-size deltas are clamped to this before exponentiation.
inline constexpr double kMaxLogScale = 4.135166556742356;  // log(1000 / 16)

template <typename Scalar>
BoxDelta<Scalar> encode_delta(const Box<Scalar>& target, const Box<Scalar>& reference) {
  if (!target.valid() || !reference.valid()) throw ValidationError("box regression needs positive sizes");
  return {(target.center_x() - reference.center_x()) / reference.width,
          (target.center_y() - reference.center_y()) / reference.height, std::log(target.width / reference.width),
          std::log(target.height / reference.height)};
}

template <typename Scalar>
Box<Scalar> decode_delta(const BoxDelta<Scalar>& d, const Box<Scalar>& reference) {
  if (!reference.valid()) throw ValidationError("box regression needs positive sizes");
  const Scalar cx = reference.center_x() + d.tx * reference.width;
  const Scalar cy = reference.center_y() + d.ty * reference.height;
  const Scalar w = reference.width * std::exp(std::min<Scalar>(d.tw, Scalar(kMaxLogScale)));
  const Scalar h = reference.height * std::exp(std::min<Scalar>(d.th, Scalar(kMaxLogScale)));
  return Box<Scalar>::from_center(cx, cy, w, h);
}

inline BoxDelta<double> encode_delta(const BoundingBox& target, const Anchor& anchor) {
  return encode_delta(target, anchor.box());
}
inline BoundingBox decode_delta(const BoxDelta<double>& d, const Anchor& anchor) { return decode_delta(d, anchor.box()); }

// ---------------------------------------------------------------------------
// Anchor assignment

enum class AnchorLabel { kNegative, kPositive, kIgnore };

struct AnchorAssignment {
  AnchorLabel label{AnchorLabel::kNegative};
  int gt_index{-1};     // best-overlapping gt, for positives
  double max_iou{0};
};

struct AssignOptions {
  double pos_iou{0.7};
  double neg_iou{0.3};
  /// When set, anchors crossing [0, w) x [0, h) are ignored and excluded
  /// from the best-anchor rule.
  std::optional<std::pair<double, double>> image_extent;
};

/// Positive when IoU >= pos_iou with some gt or when the anchor attains a
/// gt's best IoU; negative when max IoU <= neg_iou; otherwise ignored.
std::vector<AnchorAssignment> assign_anchors(std::span<const Anchor> anchors, std::span<const BoundingBox> gt_boxes,
                                             const AssignOptions& options = {});

// ---------------------------------------------------------------------------
// RoI pooling

/// Half-open cell ranges of one pooling bin on the feature map.
struct PoolBin {
  int row_begin{0};
  int row_end{0};
  int col_begin{0};
  int col_end{0};
};

inline constexpr int kRoiGrid = 7;

/// Map `box` to feature cells (divide by stride, round outward, clamp to
/// the map when its size is given) and cut it into grid x grid bins with
/// boundaries floor(i W / grid) .. ceil((i + 1) W / grid). Row-major bins.
/// Throws ValidationError if the mapped box is empty.
std::vector<PoolBin> roi_pool_bins(const BoundingBox& box, double feature_stride, int grid = kRoiGrid,
                                   std::optional<std::pair<int, int>> feature_shape = std::nullopt);

// ---------------------------------------------------------------------------
// Detections

struct Detection {
  BoundingBox box;
  int class_index{1};  // 0 is background and never emitted
  double score{0};
};

inline constexpr double kDefaultNmsIou = 0.3;

/// Greedy NMS: keep the best remaining detection, drop others (of the same
/// class when `class_wise`) with IoU > threshold. Output by descending score.
std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold = kDefaultNmsIou,
                           bool class_wise = true);

/// Indices kept by greedy NMS over boxes with scores; ties keep input order.
std::vector<std::size_t> nms_indices(std::span<const BoundingBox> boxes, std::span<const double> scores,
                                     double iou_threshold, std::size_t max_keep = static_cast<std::size_t>(-1));

inline constexpr int kMaxDetections = 5;
inline constexpr double kMinDetectionScore = 0.5;

/// Keep detections with score > min_score, at most max_count, ordered by
/// descending score then box origin.
std::vector<Detection> select_detections(std::span<const Detection> detections, int max_count = kMaxDetections,
                                         double min_score = kMinDetectionScore);

}  // namespace lesionkit
