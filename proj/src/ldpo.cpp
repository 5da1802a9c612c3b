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

#include "lesionkit/ldpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lesionkit/csv.hpp"
#include "lesionkit/dataset.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

FeatureMatrix<double> normalized_features(const Encoder& encoder, const Eigen::MatrixXd& inputs) {
  FeatureMatrix<double> f = encoder.encode(inputs);
  if (!f.allFinite()) throw TrainingError("encoder produced non-finite features");
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const double norm = f.row(i).norm();
    if (norm > 0) f.row(i) /= norm;
  }
  return f;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

double accuracy(const Encoder& encoder, const Eigen::MatrixXd& inputs, std::span<const std::size_t> idx,
                const Partition& labels) {
  if (idx.empty()) return 0.0;
  const auto pred = encoder.predict(take_rows(inputs, idx));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) correct += pred[i] == labels[idx[i]] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

LdpoResult run_ldpo(const Eigen::MatrixXd& inputs, std::unique_ptr<Encoder> encoder, const LdpoConfig& config) {
  if (!encoder) throw ValidationError("run_ldpo needs an encoder");
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n < std::max<std::size_t>(config.min_patches, 10)) {
    throw ValidationError("categorization needs at least " + std::to_string(std::max<std::size_t>(config.min_patches, 10)) +
                          " patches, got " + std::to_string(n));
  }
  if (config.max_iter < 1) throw ValidationError("max_iter must be >= 1");

  LdpoResult result;
  int k = 0;
  for (int it = 0; it < config.max_iter; ++it) {
    const std::uint64_t round_seed = config.seed + 7919ULL * static_cast<std::uint64_t>(it);
    const auto features = normalized_features(*encoder, inputs);

    if (it == 0) {
      const int k_max = std::min<int>(config.k_max, static_cast<int>(n) - 1);
      k = select_k(features, config.k_min, k_max, config.seed, config.kmeans).k;
    }

    const auto fit = kmeans_fit(features, k, round_seed, config.kmeans);
    ClusterState state;
    state.iteration = it;
    state.k = k;
    state.assignments = fit.assignments;
    state.centroids = fit.centroids;
    if (!result.history.empty()) {
      const auto& prev = result.history.back().assignments;
      // Keep ids stable across rounds so the classifier head carries over.
      state.assignments = match_labels(state.assignments, prev, k);
      Eigen::MatrixXd reordered(k, fit.centroids.cols());
      for (std::size_t i = 0; i < n; ++i) reordered.row(state.assignments[i]) = fit.centroids.row(fit.assignments[i]);
      state.centroids = reordered;
      state.purity_vs_prev = purity(state.assignments, prev);
      state.nmi_vs_prev = nmi(state.assignments, prev);
    }

    const auto split = split_for_iteration(n, round_seed);
    Partition train_labels;
    train_labels.reserve(split.train.size());
    for (auto i : split.train) train_labels.push_back(state.assignments[i]);
    try {
      encoder->train(take_rows(inputs, split.train), train_labels, k, config.encoder, round_seed);
    } catch (const TrainingError& e) {
      throw TrainingError("iteration " + std::to_string(it) + ": " + e.what());
    }
    state.val_top1_accuracy = accuracy(*encoder, inputs, split.val, state.assignments);
    state.test_top1_accuracy = accuracy(*encoder, inputs, split.test, state.assignments);
    result.history.push_back(state);

    if (state.purity_vs_prev &&
        std::min(*state.purity_vs_prev, *state.nmi_vs_prev) >= config.threshold) {
      result.converged = true;
      break;
    }
  }
  result.final_state = result.history.back();
  result.encoder = std::move(encoder);
  return result;
}

void write_ldpo_history(std::span<const ClusterState> history, std::ostream& out) {
  out << "iter,k,purity,nmi,test_top1\n";
  for (const auto& s : history) {
    out << s.iteration << ',' << s.k << ',' << (s.purity_vs_prev ? csv::number(*s.purity_vs_prev) : "") << ','
        << (s.nmi_vs_prev ? csv::number(*s.nmi_vs_prev) : "") << ',' << csv::number(s.test_top1_accuracy) << '\n';
  }
}

}  // namespace lesionkit
