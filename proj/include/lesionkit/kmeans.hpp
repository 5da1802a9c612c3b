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
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lesionkit/cluster_metrics.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

/// One feature vector per row.
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KMeansOptions {
  int max_iter{300};
  double tol{1e-6};
  int n_init{10};  // independent k-means++ restarts; lowest inertia wins
};

template <typename Scalar>
struct KMeansResult {
  Partition assignments;
  FeatureMatrix<Scalar> centroids;
  Scalar inertia{0};
  /// Inertia after each assignment step of the winning restart, ending
  /// with the final value.
  std::vector<Scalar> inertia_trace;
};

namespace detail {

template <typename Scalar>
FeatureMatrix<Scalar> kmeanspp_init(const FeatureMatrix<Scalar>& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  FeatureMatrix<Scalar> centroids(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.row(0) = x.row(pick(rng));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = static_cast<double>(d2.sum());
    Eigen::Index chosen = 0;
    if (total > 0) {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= static_cast<double>(d2[i]);
        if (target < 0 && d2[i] > 0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

/// Squared distances below this fraction of the data scale are rounding
/// noise from centroid averaging and count as zero, so duplicate points tie.
template <typename Scalar>
Scalar distance_floor(const FeatureMatrix<Scalar>& x) {
  const Scalar scale = x.rows() > 0 ? x.rowwise().squaredNorm().maxCoeff() : Scalar(0);
  return Scalar(1e-20) * (Scalar(1) + scale);
}

/// Nearest centroid per row (lowest index on ties); returns squared distances.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> assign_nearest(const FeatureMatrix<Scalar>& x,
                                                        const FeatureMatrix<Scalar>& centroids,
                                                        Partition& assignments) {
  const Scalar floor = distance_floor(x);
  const Eigen::Index n = x.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> best(n);
  assignments.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar bd = std::numeric_limits<Scalar>::infinity();
    int bc = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      Scalar d = (x.row(i) - centroids.row(c)).squaredNorm();
      if (d < floor) d = 0;
      if (d < bd) {
        bd = d;
        bc = static_cast<int>(c);
      }
    }
    best[i] = bd;
    assignments[static_cast<std::size_t>(i)] = bc;
  }
  return best;
}

/// Single-point transfers (Hartigan): move a point whenever that lowers the
/// total within-cluster sum of squares once both centroids are updated.
/// Escapes Lloyd fixed points that are not local optima of the objective.
template <typename Scalar>
void hartigan_refine(const FeatureMatrix<Scalar>& x, FeatureMatrix<Scalar>& centroids, std::vector<int>& assignments) {
  const Eigen::Index n = x.rows();
  const auto k = static_cast<int>(centroids.rows());
  if (k < 2) return;
  const Scalar floor = distance_floor(x);
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  for (int pass = 0; pass < 100; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = assignments[static_cast<std::size_t>(i)];
      const auto na = static_cast<Scalar>(sizes[static_cast<std::size_t>(a)]);
      if (na < 2) continue;
      const Scalar leave = na / (na - 1) * (x.row(i) - centroids.row(a)).squaredNorm();
      int target = -1;
      Scalar join = leave;
      for (int c = 0; c < k; ++c) {
        if (c == a) continue;
        const auto nc = static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
        const Scalar cost = nc / (nc + 1) * (x.row(i) - centroids.row(c)).squaredNorm();
        if (cost < join) {
          join = cost;
          target = c;
        }
      }
      if (target < 0 || join >= leave * (1 - Scalar(1e-12)) - floor) continue;
      const auto nt = static_cast<Scalar>(sizes[static_cast<std::size_t>(target)]);
      centroids.row(a) = (centroids.row(a) * na - x.row(i)) / (na - 1);
      centroids.row(target) = (centroids.row(target) * nt + x.row(i)) / (nt + 1);
      --sizes[static_cast<std::size_t>(a)];
      ++sizes[static_cast<std::size_t>(target)];
      assignments[static_cast<std::size_t>(i)] = target;
      moved = true;
    }
    if (!moved) break;
  }
  centroids.setZero();
  for (Eigen::Index i = 0; i < n; ++i) centroids.row(assignments[static_cast<std::size_t>(i)]) += x.row(i);
  for (int c = 0; c < k; ++c) centroids.row(c) /= static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
}

template <typename Scalar>
KMeansResult<Scalar> lloyd(const FeatureMatrix<Scalar>& x, FeatureMatrix<Scalar> centroids,
                           const KMeansOptions& opt) {
  const Eigen::Index n = x.rows();
  const auto k = static_cast<int>(centroids.rows());
  KMeansResult<Scalar> r;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dist;
  for (int it = 0; it < std::max(1, opt.max_iter); ++it) {
    dist = assign_nearest(x, centroids, r.assignments);

    // Re-seed empty clusters with the point farthest from its centroid,
    // taken only from clusters that keep at least one other member.
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : r.assignments) ++sizes[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(r.assignments[static_cast<std::size_t>(i)])] < 2) continue;
        if (far < 0 || dist[i] > dist[far]) far = i;
      }
      --sizes[static_cast<std::size_t>(r.assignments[static_cast<std::size_t>(far)])];
      r.assignments[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      centroids.row(c) = x.row(far);
      dist[far] = 0;
    }
    r.inertia_trace.push_back(dist.sum());

    FeatureMatrix<Scalar> next = FeatureMatrix<Scalar>::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) next.row(r.assignments[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < k; ++c) next.row(c) /= static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
    const Scalar shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift < static_cast<Scalar>(opt.tol)) break;
  }
  hartigan_refine(x, centroids, r.assignments);
  r.inertia = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.inertia += (x.row(i) - centroids.row(r.assignments[static_cast<std::size_t>(i)])).squaredNorm();
  }
  r.inertia_trace.push_back(r.inertia);
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace detail

/// k-means with k-means++ seeding, Lloyd iterations and a final pass of
/// single-point transfers. Every returned
/// cluster is nonempty. Throws ValidationError if k < 1 or k > rows.
template <typename Scalar>
KMeansResult<Scalar> kmeans_fit(const FeatureMatrix<Scalar>& x, int k, std::uint64_t seed,
                                const KMeansOptions& opt = {}) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (k > x.rows()) throw ValidationError("k exceeds the number of feature vectors");
  std::mt19937_64 rng(seed);
  KMeansResult<Scalar> best;
  bool have = false;
  for (int run = 0; run < std::max(1, opt.n_init); ++run) {
    auto r = detail::lloyd(x, detail::kmeanspp_init(x, k, rng), opt);
    if (!have || r.inertia < best.inertia) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

/// Mean silhouette coefficient with Euclidean distances. Items in singleton
/// clusters score 0.
template <typename Scalar>
double mean_silhouette(const FeatureMatrix<Scalar>& x, std::span<const int> labels, int k) {
  const Eigen::Index n = x.rows();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sq = x.rowwise().squaredNorm();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d = (-2 * x * x.transpose()).eval();
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(Scalar(0)).cwiseSqrt();

  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  double total = 0;
  std::vector<double> sum(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += d(i, j);
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (sizes[own] < 2) continue;
    const double a = sum[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sum[c] / sizes[c]);
    }
    const double m = std::max(a, b);
    if (m > 0 && std::isfinite(b)) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

struct KSelection {
  int k{0};
  std::vector<std::pair<int, double>> silhouettes;  // (k, mean silhouette)
};

/// Silhouettes closer than this to the best one count as ties.
inline constexpr double kSilhouetteTieTolerance = 0.02;

/// Fit k-means for each k in [k_min, k_max] and keep the highest mean
/// silhouette. Ties, up to `tie_tolerance`, resolve to the smaller k.
template <typename Scalar>
KSelection select_k(const FeatureMatrix<Scalar>& x, int k_min, int k_max, std::uint64_t seed,
                    const KMeansOptions& opt = {}, double tie_tolerance = kSilhouetteTieTolerance) {
  if (k_min < 2 || k_max < k_min || k_max >= x.rows()) {
    throw ValidationError("k range must satisfy 2 <= k_min <= k_max < n");
  }
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    const auto fit = kmeans_fit(x, k, seed, opt);
    const double s = mean_silhouette(x, std::span<const int>(fit.assignments), k);
    sel.silhouettes.emplace_back(k, s);
    best = std::max(best, s);
  }
  for (const auto& [k, s] : sel.silhouettes) {
    if (s >= best - tie_tolerance) {
      sel.k = k;
      break;
    }
  }
  return sel;
}

}  // namespace lesionkit
