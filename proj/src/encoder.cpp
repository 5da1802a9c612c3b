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

#include "lesionkit/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

/// Row-wise softmax, stabilized by the row max.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace

MlpEncoder::MlpEncoder(int input_size, int hidden, std::uint64_t seed) : seed_(seed) {
  if (input_size < 1 || hidden < 1) throw ValidationError("encoder sizes must be positive");
  std::mt19937_64 rng(seed);
  w1_ = gaussian(hidden, input_size, std::sqrt(2.0 / input_size), rng);
  b1_ = Eigen::VectorXd::Zero(hidden);
}

void MlpEncoder::reset_head(int num_classes) {
  std::mt19937_64 rng(seed_ ^ 0x9e3779b97f4a7c15ULL);
  w2_ = gaussian(num_classes, w1_.rows(), 0.01, rng);
  b2_ = Eigen::VectorXd::Zero(num_classes);
}

Eigen::MatrixXd MlpEncoder::encode(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != w1_.cols()) throw ValidationError("encoder input size mismatch");
  Eigen::MatrixXd h = inputs * w1_.transpose();
  h.rowwise() += b1_.transpose();
  return h.cwiseMax(0.0);
}

Eigen::MatrixXd MlpEncoder::logits(const Eigen::MatrixXd& hidden) const {
  Eigen::MatrixXd z = hidden * w2_.transpose();
  z.rowwise() += b2_.transpose();
  return z;
}

double MlpEncoder::loss(const Eigen::MatrixXd& inputs, std::span<const int> labels) const {
  const Eigen::MatrixXd p = softmax_rows(logits(encode(inputs)));
  double total = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) total -= std::log(std::max(p(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  return total / static_cast<double>(p.rows());
}

EncoderTrainStats MlpEncoder::train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int num_classes,
                                    const EncoderTrainOptions& options, std::uint64_t seed) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size())) throw ValidationError("label count mismatch");
  if (inputs.rows() == 0) throw ValidationError("no training inputs");
  if (num_classes < 1) throw ValidationError("num_classes must be positive");
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw ValidationError("label outside [0, num_classes)");
  }
  if (w2_.rows() != num_classes) reset_head(num_classes);

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<Eigen::Index>(std::max(1, options.batch_size));

  EncoderTrainStats stats;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    int batches = 0;
    for (Eigen::Index start = 0; start < inputs.rows(); start += batch) {
      const Eigen::Index m = std::min(batch, inputs.rows() - start);
      Eigen::MatrixXd x(m, inputs.cols());
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(m, num_classes);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto src = order[static_cast<std::size_t>(start + i)];
        x.row(i) = inputs.row(src);
        onehot(i, labels[static_cast<std::size_t>(src)]) = 1.0;
      }
      const Eigen::MatrixXd h = encode(x);
      const Eigen::MatrixXd p = softmax_rows(logits(h));
      const double batch_loss = -(onehot.array() * p.array().max(1e-300).log()).sum() / static_cast<double>(m);
      if (!std::isfinite(batch_loss)) throw TrainingError("encoder loss became non-finite");
      epoch_loss += batch_loss;
      ++batches;

      const Eigen::MatrixXd dz = (p - onehot) / static_cast<double>(m);
      const Eigen::MatrixXd dh = ((dz * w2_).array() * (h.array() > 0.0).cast<double>()).matrix();
      w2_.noalias() -= options.learning_rate * dz.transpose() * h;
      b2_ -= options.learning_rate * dz.colwise().sum().transpose();
      w1_.noalias() -= options.learning_rate * dh.transpose() * x;
      b1_ -= options.learning_rate * dh.colwise().sum().transpose();
    }
    stats.epoch_loss.push_back(epoch_loss / batches);
  }
  return stats;
}

Partition MlpEncoder::predict(const Eigen::MatrixXd& inputs) const {
  if (w2_.rows() == 0) throw ValidationError("encoder has no classifier head; train it first");
  const Eigen::MatrixXd z = logits(encode(inputs));
  Partition out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

Eigen::MatrixXd patch_matrix(std::span<const Raster> patches) {
  if (patches.empty()) return {};
  const Eigen::Index dim = patches.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(patches.size()), dim);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i].size() != dim) throw ValidationError("patches differ in size");
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::Matrix<std::uint16_t, 1, Eigen::Dynamic>>(patches[i].data(), dim).cast<double>() /
        65535.0;
  }
  return m;
}

Eigen::MatrixXd patch_matrix(std::span<const LesionPatch> patches) {
  std::vector<Raster> rasters;
  rasters.reserve(patches.size());
  for (const auto& p : patches) rasters.push_back(p.pixels);
  return patch_matrix(std::span<const Raster>(rasters));
}

}  // namespace lesionkit
