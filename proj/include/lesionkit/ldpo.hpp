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

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lesionkit/cluster_metrics.hpp"
#include "lesionkit/encoder.hpp"
#include "lesionkit/kmeans.hpp"

namespace lesionkit {

struct LdpoConfig {
  int k_min{2};
  int k_max{10};
  double threshold{0.90};  // applied to min(purity, nmi) between adjacent iterations
  int max_iter{20};        // upper bound on the number of iterations run
  std::uint64_t seed{0};
  int hidden_units{128};
  EncoderTrainOptions encoder;
  KMeansOptions kmeans;
  std::size_t min_patches{50};
};

/// State after one encode / cluster / retrain round.
struct ClusterState {
  int iteration{0};
  int k{0};
  Partition assignments;
  Eigen::MatrixXd centroids;
  std::optional<double> purity_vs_prev;
  std::optional<double> nmi_vs_prev;
  double test_top1_accuracy{0};
  double val_top1_accuracy{0};
};

struct LdpoResult {
  ClusterState final_state;
  std::vector<ClusterState> history;
  std::unique_ptr<Encoder> encoder;
  bool converged{false};
};

/// Iterate encode -> (select k once) -> k-means -> retrain until the
/// adjacent-iteration agreement min(purity, nmi) reaches the threshold or
/// max_iter rounds have run. `inputs` holds one flattened patch per row.
/// Throws ValidationError on too few patches and TrainingError (naming the
/// iteration) if encoder training diverges.
LdpoResult run_ldpo(const Eigen::MatrixXd& inputs, std::unique_ptr<Encoder> encoder, const LdpoConfig& config);

/// History CSV: iter,k,purity,nmi,test_top1 (purity and nmi empty at iteration 0).
void write_ldpo_history(std::span<const ClusterState> history, std::ostream& out);

}  // namespace lesionkit
