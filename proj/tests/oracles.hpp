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

// Independent re-implementations used to cross-check the library. They
// deliberately share no code with it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lesionkit/bookmark.hpp"
#include "lesionkit/box.hpp"

namespace oracle {

inline double purity(const std::vector<int>& predicted, const std::vector<int>& reference) {
  std::map<int, std::map<int, int>> votes;
  for (std::size_t i = 0; i < predicted.size(); ++i) ++votes[predicted[i]][reference[i]];
  int hits = 0;
  for (const auto& [cluster, counts] : votes) {
    int best = 0;
    for (const auto& [label, n] : counts) best = std::max(best, n);
    hits += best;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1 / n;
    pb[b[i]] += 1 / n;
    pab[{a[i], b[i]}] += 1 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (const auto& [k, p] : pa) ha -= p * std::log(p);
  for (const auto& [k, p] : pb) hb -= p * std::log(p);
  for (const auto& [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  if (pa.size() == 1 && pb.size() == 1) return 1.0;
  if (pa.size() == 1 || pb.size() == 1) return 0.0;
  return mi / std::sqrt(ha * hb);
}

/// Lowest within-cluster sum of squares over every 2-partition of the rows.
inline std::pair<double, std::vector<int>> best_two_partition(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  for (int mask = 1; mask < (1 << (n - 1)); ++mask) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    double sse = 0;
    for (int c = 0; c < 2; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == c) {
          mean += x.row(i);
          ++count;
        }
      }
      mean /= count;
      for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == c) sse += (x.row(i) - mean).squaredNorm();
      }
    }
    if (sse < best) {
      best = sse;
      best_labels = labels;
    }
  }
  return {best, best_labels};
}

/// True when the two labelings describe the same grouping.
inline bool same_grouping(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

/// IoU by counting sample points of a regular grid (spacing 1 / cells_per_unit,
/// centred samples) that fall inside each box. Boxes are products of
/// intervals, so the 2-D count factorizes into per-axis counts.
inline long long samples_in(double lo, double hi, double origin, double step) {
  if (hi <= lo) return 0;
  // Samples sit at origin + (i + 0.5) * step; count those in [lo, hi).
  const auto first = static_cast<long long>(std::ceil((lo - origin) / step - 0.5));
  const auto last = static_cast<long long>(std::ceil((hi - origin) / step - 0.5));
  return std::max(0LL, last - first);
}

inline double rasterized_iou(const lesionkit::BoundingBox& a, const lesionkit::BoundingBox& b, int cells_per_unit) {
  const double step = 1.0 / cells_per_unit;
  const double ox = std::min(a.left_x, b.left_x), oy = std::min(a.top_y, b.top_y);
  const auto ax = samples_in(a.left_x, a.right(), ox, step), ay = samples_in(a.top_y, a.bottom(), oy, step);
  const auto bx = samples_in(b.left_x, b.right(), ox, step), by = samples_in(b.top_y, b.bottom(), oy, step);
  const auto ix = samples_in(std::max(a.left_x, b.left_x), std::min(a.right(), b.right()), ox, step);
  const auto iy = samples_in(std::max(a.top_y, b.top_y), std::min(a.bottom(), b.bottom()), oy, step);
  const double both = static_cast<double>(ix) * static_cast<double>(iy);
  const double uni = static_cast<double>(ax) * ay + static_cast<double>(bx) * by - both;
  return uni <= 0 ? 0.0 : both / uni;
}

/// Padded min/max box of four endpoints intersected with the image rectangle.
inline lesionkit::BoundingBox minmax_box(const lesionkit::DiameterPair& d, int w, int h, double pad) {
  const double xs[4] = {d.long_axis.a.x, d.long_axis.b.x, d.short_axis.a.x, d.short_axis.b.x};
  const double ys[4] = {d.long_axis.a.y, d.long_axis.b.y, d.short_axis.a.y, d.short_axis.b.y};
  const double lo_x = *std::min_element(xs, xs + 4) - pad;
  const double hi_x = *std::max_element(xs, xs + 4) + pad;
  const double lo_y = *std::min_element(ys, ys + 4) - pad;
  const double hi_y = *std::max_element(ys, ys + 4) + pad;
  const double cx0 = std::max(lo_x, 0.0), cy0 = std::max(lo_y, 0.0);
  const double cx1 = std::min(hi_x, static_cast<double>(w)), cy1 = std::min(hi_y, static_cast<double>(h));
  return {cx0, cy0, cx1 - cx0, cy1 - cy0};
}

}  // namespace oracle
