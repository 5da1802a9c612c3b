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

#include <algorithm>
#include <cmath>

namespace lesionkit {

/// Axis-aligned box in pixel units, (left_x, top_y, width, height).
/// Coordinates are continuous: the box covers [left_x, left_x + width) x
/// [top_y, top_y + height).
template <typename Scalar>
struct Box {
  Scalar left_x{0};
  Scalar top_y{0};
  Scalar width{0};
  Scalar height{0};

  Scalar right() const { return left_x + width; }
  Scalar bottom() const { return top_y + height; }
  Scalar center_x() const { return left_x + width / Scalar(2); }
  Scalar center_y() const { return top_y + height / Scalar(2); }
  Scalar area() const { return width * height; }
  bool valid() const { return width > Scalar(0) && height > Scalar(0); }

  static Box from_corners(Scalar x0, Scalar y0, Scalar x1, Scalar y1) {
    return Box{x0, y0, x1 - x0, y1 - y0};
  }
  static Box from_center(Scalar cx, Scalar cy, Scalar w, Scalar h) {
    return Box{cx - w / Scalar(2), cy - h / Scalar(2), w, h};
  }

  template <typename Other>
  Box<Other> cast() const {
    return Box<Other>{Other(left_x), Other(top_y), Other(width), Other(height)};
  }

  Box scaled(Scalar s) const { return Box{left_x * s, top_y * s, width * s, height * s}; }
  Box translated(Scalar dx, Scalar dy) const { return Box{left_x + dx, top_y + dy, width, height}; }

  friend bool operator==(const Box&, const Box&) = default;
};

using BoundingBox = Box<double>;

template <typename Scalar>
Scalar intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar w = std::min(a.right(), b.right()) - std::max(a.left_x, b.left_x);
  const Scalar h = std::min(a.bottom(), b.bottom()) - std::max(a.top_y, b.top_y);
  if (w <= Scalar(0) || h <= Scalar(0)) return Scalar(0);
  return w * h;
}

/// Intersection over union on continuous coordinates. Zero for
/// non-overlapping or degenerate boxes.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  if (inter <= Scalar(0)) return Scalar(0);
  const Scalar uni = a.area() + b.area() - inter;
  return uni > Scalar(0) ? std::min(Scalar(1), inter / uni) : Scalar(0);
}

/// Clip to [0, width) x [0, height). The result may be degenerate.
template <typename Scalar>
Box<Scalar> clip_to(const Box<Scalar>& b, Scalar width, Scalar height) {
  const Scalar x0 = std::clamp(b.left_x, Scalar(0), width);
  const Scalar y0 = std::clamp(b.top_y, Scalar(0), height);
  const Scalar x1 = std::clamp(b.right(), Scalar(0), width);
  const Scalar y1 = std::clamp(b.bottom(), Scalar(0), height);
  return Box<Scalar>::from_corners(x0, y0, x1, y1);
}

}  // namespace lesionkit
