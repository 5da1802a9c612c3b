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

#include "lesionkit/cluster_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

std::vector<int> dense_ids(std::span<const int> labels, int& count) {
  std::unordered_map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  count = static_cast<int>(remap.size());
  return out;
}

void check_pair(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("partitions have different lengths");
  if (a.empty()) throw ValidationError("partitions are empty");
}

}  // namespace

Eigen::MatrixXd contingency_table(std::span<const int> a, std::span<const int> b) {
  check_pair(a, b);
  int ka = 0, kb = 0;
  const auto da = dense_ids(a, ka);
  const auto db = dense_ids(b, kb);
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
  for (std::size_t i = 0; i < da.size(); ++i) table(da[i], db[i]) += 1.0;
  return table;
}

double purity(std::span<const int> predicted, std::span<const int> reference) {
  const Eigen::MatrixXd table = contingency_table(predicted, reference);
  return table.rowwise().maxCoeff().sum() / static_cast<double>(predicted.size());
}

double nmi(std::span<const int> a, std::span<const int> b) {
  const Eigen::MatrixXd table = contingency_table(a, b);
  const double n = static_cast<double>(a.size());
  const Eigen::VectorXd pa = table.rowwise().sum() / n;
  const Eigen::RowVectorXd pb = table.colwise().sum() / n;

  auto entropy = [](const auto& p) {
    double h = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] > 0) h -= p[i] * std::log(p[i]);
    }
    return h;
  };
  const double ha = entropy(pa);
  const double hb = entropy(pb);
  const bool a_trivial = table.rows() == 1;
  const bool b_trivial = table.cols() == 1;
  if (a_trivial && b_trivial) return 1.0;
  if (a_trivial || b_trivial) return 0.0;

  double mi = 0;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double pij = table(i, j) / n;
      if (pij > 0) mi += pij * std::log(pij / (pa[i] * pb[j]));
    }
  }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

Partition match_labels(std::span<const int> current, std::span<const int> previous, int k) {
  check_pair(current, previous);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current[i] < 0 || current[i] >= k || previous[i] < 0 || previous[i] >= k) {
      throw ValidationError("cluster id outside [0, k)");
    }
    overlap(current[i], previous[i]) += 1.0;
  }
  std::vector<int> mapping(static_cast<std::size_t>(k), -1);
  std::vector<bool> taken(static_cast<std::size_t>(k), false);
  for (int round = 0; round < k; ++round) {
    double best = -1;
    int bi = -1, bj = -1;
    for (int i = 0; i < k; ++i) {
      if (mapping[static_cast<std::size_t>(i)] >= 0) continue;
      for (int j = 0; j < k; ++j) {
        if (taken[static_cast<std::size_t>(j)]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    mapping[static_cast<std::size_t>(bi)] = bj;
    taken[static_cast<std::size_t>(bj)] = true;
  }
  Partition out(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) out[i] = mapping[static_cast<std::size_t>(current[i])];
  return out;
}

}  // namespace lesionkit
