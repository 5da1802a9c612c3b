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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lesionkit/cluster_metrics.hpp"
#include "lesionkit/dataset.hpp"

namespace lesionkit {

struct EncoderTrainOptions {
  int epochs{5};
  int batch_size{32};
  double learning_rate{0.01};
};

struct EncoderTrainStats {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

/// Trainable patch encoder. Inputs are one flattened patch per row.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual int dimension() const = 0;
  virtual int input_size() const = 0;

  /// Feature vectors, one row per input row. Deterministic for a fixed state.
  virtual Eigen::MatrixXd encode(const Eigen::MatrixXd& inputs) const = 0;

  /// Supervised update on (inputs, labels in [0, num_classes)). Throws
  /// TrainingError if the loss becomes non-finite.
  virtual EncoderTrainStats train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int num_classes,
                                  const EncoderTrainOptions& options, std::uint64_t seed) = 0;

  /// Arg-max class for each input row; requires a prior train().
  virtual Partition predict(const Eigen::MatrixXd& inputs) const = 0;

  virtual std::unique_ptr<Encoder> clone() const = 0;
};

/// One hidden rectified-linear layer followed by a softmax classifier head;
/// the hidden activations are the features.
class MlpEncoder final : public Encoder {
 public:
  MlpEncoder(int input_size, int hidden, std::uint64_t seed);

  int dimension() const override { return static_cast<int>(w1_.rows()); }
  int input_size() const override { return static_cast<int>(w1_.cols()); }
  int num_classes() const { return static_cast<int>(w2_.rows()); }

  Eigen::MatrixXd encode(const Eigen::MatrixXd& inputs) const override;
  EncoderTrainStats train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int num_classes,
                          const EncoderTrainOptions& options, std::uint64_t seed) override;
  Partition predict(const Eigen::MatrixXd& inputs) const override;
  std::unique_ptr<Encoder> clone() const override { return std::make_unique<MlpEncoder>(*this); }

  /// Mean softmax cross-entropy over all rows.
  double loss(const Eigen::MatrixXd& inputs, std::span<const int> labels) const;

 private:
  void reset_head(int num_classes);
  Eigen::MatrixXd logits(const Eigen::MatrixXd& hidden) const;

  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
  std::uint64_t seed_;
};

/// Flatten patches to rows scaled to [0, 1].
Eigen::MatrixXd patch_matrix(std::span<const LesionPatch> patches);
Eigen::MatrixXd patch_matrix(std::span<const Raster> patches);

}  // namespace lesionkit
