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

#include <span>
#include <vector>

#include <Eigen/Core>

namespace lesionkit {

/// Cluster id per item. Ids are arbitrary integers; only equality matters.
using Partition = std::vector<int>;

/// Joint counts of two partitions over dense-remapped ids (rows follow
/// first appearance order in `a`, columns in `b`).
Eigen::MatrixXd contingency_table(std::span<const int> a, std::span<const int> b);

/// Fraction of items that belong to the majority reference cluster of their
/// predicted cluster. Asymmetric: `predicted` is grouped, `reference` voted.
double purity(std::span<const int> predicted, std::span<const int> reference);

/// I(A;B) / sqrt(H(A) H(B)) with natural-log entropies. 1 when both
/// partitions are single-cluster, 0 when exactly one is.
double nmi(std::span<const int> a, std::span<const int> b);

/// Relabel `current` so its ids agree with `previous` under greedy maximum
/// overlap. Both partitions use ids in [0, k).
Partition match_labels(std::span<const int> current, std::span<const int> previous, int k);

}  // namespace lesionkit
