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

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lesionkit/dataset.hpp"
#include "lesionkit/feature_map.hpp"
#include "lesionkit/geometry.hpp"

namespace lesionkit {

/// Shape of a detector; everything needed to rebuild anchors and feature
/// layouts from a checkpoint.
struct DetectorArch {
  int channels{kFeatureChannels};
  int num_classes{1};  // K foreground classes; the head scores K + 1
  std::vector<AnchorTemplate> templates = default_anchor_templates();
  double stride{kDefaultStride};
  int rpn_window_radius{1};     // RPN sees a (2r+1)^2 neighbourhood of cells
  int rpn_window_dilation{3};   // spacing between neighbourhood cells
  int pool_grid{kRoiGrid};
  int max_side{kDefaultDetectionSide};
  std::array<double, 4> head_delta_std{0.1, 0.1, 0.2, 0.2};

  int template_count() const { return static_cast<int>(templates.size()); }
  /// Input width of the RPN including the bias term.
  Eigen::Index rpn_inputs() const {
    const Eigen::Index side = 2 * rpn_window_radius + 1;
    return side * side * channels + 1;
  }
  /// Input width of the second stage including the bias term.
  Eigen::Index head_inputs() const { return static_cast<Eigen::Index>(pool_grid) * pool_grid * channels + 1; }
};

struct LossTerms {
  double rpn_cls{0};
  double rpn_reg{0};
  double head_cls{0};
  double head_reg{0};
  double total() const { return rpn_cls + rpn_reg + head_cls + head_reg; }
};

/// Linear two-stage detector over fixed feature maps.
struct DetectorModel {
  DetectorArch arch;
  Eigen::MatrixXd rpn_cls;   // A x rpn_inputs: objectness logit per template
  Eigen::MatrixXd rpn_reg;   // 4A x rpn_inputs: deltas per template
  Eigen::MatrixXd head_cls;  // (K+1) x head_inputs
  Eigen::MatrixXd head_reg;  // 4K x head_inputs: per-class deltas
  std::vector<LossTerms> training_log;

  /// Zero weights of the right shapes.
  static DetectorModel zeros(const DetectorArch& arch);
  /// Small Gaussian weights (std 0.01 for classifiers, 0.001 for regressors).
  static DetectorModel random(const DetectorArch& arch, std::uint64_t seed);
};

struct TrainConfig {
  int images_per_batch{4};
  int proposals_per_image{32};
  double base_lr{0.001};
  double lr_decay_factor{10};
  int lr_decay_every{800};
  int max_iterations{2000};
  std::uint64_t seed{0};
  double momentum{0.9};
  double weight_decay{0.0005};
  int rpn_batch{64};  // sampled anchors per image; positives capped at half
  double rpn_pos_iou{0.7};
  double rpn_neg_iou{0.3};
  double fg_iou{0.5};
  double fg_fraction{0.25};
  int train_pre_nms{2000};
  int train_post_nms{128};
  double rpn_nms_iou{0.7};
  int test_pre_nms{2000};
  int test_proposals{64};
  double detection_nms_iou{kDefaultNmsIou};
  bool class_wise_nms{true};
  int max_detections{kMaxDetections};
  double min_score{kMinDetectionScore};
};

/// base_lr / decay_factor^floor(iteration / decay_every).
double learning_rate(const TrainConfig& config, int iteration);

// ---------------------------------------------------------------------------
// Forward passes

/// RPN design matrix: one row per feature cell holding the dilated
/// neighbourhood (zero outside the map) followed by a bias of 1.
Eigen::MatrixXd rpn_design(const FeatureMap& fmap, const DetectorArch& arch);

struct RpnOutput {
  Eigen::MatrixXd objectness;  // cells x A, in [0, 1]
  Eigen::MatrixXd deltas;      // cells x 4A
  Eigen::Index anchor_count() const { return objectness.size(); }
  double objectness_at(Eigen::Index anchor, int templates) const {
    return objectness(anchor / templates, anchor % templates);
  }
  BoxDelta<double> delta_at(Eigen::Index anchor, int templates) const {
    const Eigen::Index cell = anchor / templates;
    const Eigen::Index t = anchor % templates;
    return {deltas(cell, 4 * t), deltas(cell, 4 * t + 1), deltas(cell, 4 * t + 2), deltas(cell, 4 * t + 3)};
  }
};

/// Throws ValidationError if the model does not match the feature map.
RpnOutput rpn_forward(const DetectorModel& model, const FeatureMap& fmap);

struct ProposalOptions {
  int count{32};
  double nms_iou{0.7};
  int pre_nms{2000};
  double min_size{4};
};

/// Decode the top `pre_nms` anchors by objectness (ties by anchor order),
/// clip to the image, drop boxes smaller than min_size, apply NMS and keep
/// the best `count`.
std::vector<BoundingBox> propose_regions(const RpnOutput& rpn, std::span<const Anchor> anchors, double image_width,
                                         double image_height, const ProposalOptions& options = {});

/// 7x7 max-pooled features inside `box` followed by a bias of 1.
Eigen::VectorXd pooled_features(const FeatureMap& fmap, const BoundingBox& box, int grid = kRoiGrid);

/// Softmax class probabilities and per-class refined boxes for proposals.
struct HeadOutput {
  Eigen::MatrixXd probabilities;                 // P x (K+1)
  std::vector<std::vector<BoundingBox>> boxes;   // P x K, index 0 = class 1
};
HeadOutput head_forward(const DetectorModel& model, const FeatureMap& fmap, std::span<const BoundingBox> proposals,
                        double image_width, double image_height);

// ---------------------------------------------------------------------------
// Losses and training

/// Sampled anchors and RoIs of one minibatch, in matrix form.
struct LossInputs {
  Eigen::MatrixXd rpn_x;             // S x rpn_inputs
  std::vector<int> rpn_template;     // S
  std::vector<int> rpn_label;        // S, 1 = object, 0 = background
  Eigen::MatrixXd rpn_target;        // S x 4, used where rpn_label == 1
  Eigen::MatrixXd head_x;            // P x head_inputs
  std::vector<int> head_label;       // P, 0 = background, 1..K
  Eigen::MatrixXd head_target;       // P x 4, normalized by head_delta_std
};

struct ModelGradient {
  Eigen::MatrixXd rpn_cls, rpn_reg, head_cls, head_reg;
};

/// Mean binary cross-entropy over sampled anchors, smooth-L1 (transition
/// 1) over positive anchors normalized by the positive count, mean softmax
/// cross-entropy over RoIs and smooth-L1 over foreground RoIs normalized by
/// the RoI count. Fills `gradient` with d(term)/d(weights) summed over
/// terms when given; `per_term` receives each term's gradient separately.
LossTerms compute_losses(const DetectorModel& model, const LossInputs& inputs, ModelGradient* gradient = nullptr,
                         std::array<ModelGradient, 4>* per_term = nullptr);

/// Precomputed per-image training data (fixed backbone features).
struct TrainingImage {
  FeatureMap fmap;
  double width{0};
  double height{0};
  std::vector<BoundingBox> gt_boxes;  // detection-scale coordinates
  std::vector<int> gt_classes;        // 1..K
  std::shared_ptr<const std::vector<Anchor>> anchors;
  std::vector<std::int32_t> positive_anchors;
  std::vector<std::int32_t> positive_gt;
  std::vector<std::int32_t> negative_anchors;
};

/// Resize to the detector scale, compute features and anchor labels.
/// `classes` are 1-based and aligned with `boxes` (original coordinates).
/// `shared_anchors` is reused when its grid matches, so images of equal
/// size share one anchor list.
TrainingImage prepare_training_image(const Raster& raster, std::span<const BoundingBox> boxes,
                                     std::span<const int> classes, const DetectorArch& arch,
                                     const TrainConfig& config,
                                     std::shared_ptr<const std::vector<Anchor>> shared_anchors = nullptr);

/// Anchor and RoI sampling for one minibatch under the current model.
LossInputs sample_minibatch(const DetectorModel& model, std::span<const TrainingImage* const> batch,
                            const TrainConfig& config, std::mt19937_64& rng);

/// Momentum buffers, one per weight block.
struct SgdState {
  ModelGradient velocity;
};

/// One SGD update on the summed four-term loss. Returns the losses before
/// the update. Throws TrainingError naming the first non-finite term.
LossTerms train_step(DetectorModel& model, SgdState& state, std::span<const TrainingImage* const> batch,
                     double lr, const TrainConfig& config, std::mt19937_64& rng);

/// Shuffled minibatches of images_per_batch under the step schedule.
/// Appends to model.training_log. Deterministic given config.seed.
DetectorModel train(DetectorModel model, std::span<const TrainingImage> dataset, const TrainConfig& config);

/// Full inference on an image in original coordinates: at most
/// max_detections boxes, all with score > min_score.
std::vector<Detection> detect(const DetectorModel& model, const Raster& image, const TrainConfig& config = {});

// ---------------------------------------------------------------------------
// Checkpoints

/// Binary checkpoint: magic "LKDETMDL", version, architecture header and
/// little-endian float64 weight blocks (rpn_cls, rpn_reg, head_cls,
/// head_reg, each row-major).
void save_checkpoint(const DetectorModel& model, std::ostream& out);
DetectorModel load_checkpoint(std::istream& in);
void save_checkpoint(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace lesionkit
