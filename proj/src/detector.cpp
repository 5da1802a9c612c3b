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

#include "lesionkit/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
double smooth_l1(double r) { return std::abs(r) < 1.0 ? 0.5 * r * r : std::abs(r) - 0.5; }
double smooth_l1_grad(double r) { return std::abs(r) < 1.0 ? r : (r > 0 ? 1.0 : -1.0); }

ModelGradient zero_like(const DetectorModel& m) {
  return {Eigen::MatrixXd::Zero(m.rpn_cls.rows(), m.rpn_cls.cols()),
          Eigen::MatrixXd::Zero(m.rpn_reg.rows(), m.rpn_reg.cols()),
          Eigen::MatrixXd::Zero(m.head_cls.rows(), m.head_cls.cols()),
          Eigen::MatrixXd::Zero(m.head_reg.rows(), m.head_reg.cols())};
}

void check_shapes(const DetectorModel& m) {
  const auto& a = m.arch;
  const Eigen::Index t = a.template_count();
  if (m.rpn_cls.rows() != t || m.rpn_cls.cols() != a.rpn_inputs() || m.rpn_reg.rows() != 4 * t ||
      m.rpn_reg.cols() != a.rpn_inputs() || m.head_cls.rows() != a.num_classes + 1 ||
      m.head_cls.cols() != a.head_inputs() || m.head_reg.rows() != 4 * a.num_classes ||
      m.head_reg.cols() != a.head_inputs()) {
    throw ValidationError("detector weights do not match the architecture");
  }
}

RpnOutput rpn_from_design(const DetectorModel& model, const Eigen::MatrixXd& design) {
  RpnOutput out;
  out.objectness = (design * model.rpn_cls.transpose()).unaryExpr([](double z) { return sigmoid(z); });
  out.deltas = design * model.rpn_reg.transpose();
  return out;
}

template <typename T>
std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t count, std::mt19937_64& rng) {
  std::vector<T> copy = pool;
  count = std::min(count, copy.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, copy.size() - 1);
    std::swap(copy[i], copy[pick(rng)]);
  }
  copy.resize(count);
  return copy;
}

}  // namespace

DetectorModel DetectorModel::zeros(const DetectorArch& arch) {
  if (arch.channels < 1 || arch.num_classes < 1 || arch.templates.empty() || arch.pool_grid < 1 ||
      arch.rpn_window_radius < 0 || arch.rpn_window_dilation < 1 || !(arch.stride > 0) || arch.max_side < 1) {
    throw ValidationError("invalid detector architecture");
  }
  DetectorModel m;
  m.arch = arch;
  const Eigen::Index t = arch.template_count();
  m.rpn_cls = Eigen::MatrixXd::Zero(t, arch.rpn_inputs());
  m.rpn_reg = Eigen::MatrixXd::Zero(4 * t, arch.rpn_inputs());
  m.head_cls = Eigen::MatrixXd::Zero(arch.num_classes + 1, arch.head_inputs());
  m.head_reg = Eigen::MatrixXd::Zero(4 * arch.num_classes, arch.head_inputs());
  return m;
}

DetectorModel DetectorModel::random(const DetectorArch& arch, std::uint64_t seed) {
  DetectorModel m = zeros(arch);
  std::mt19937_64 rng(seed);
  m.rpn_cls = gaussian(m.rpn_cls.rows(), m.rpn_cls.cols(), 0.01, rng);
  m.rpn_reg = gaussian(m.rpn_reg.rows(), m.rpn_reg.cols(), 0.001, rng);
  m.head_cls = gaussian(m.head_cls.rows(), m.head_cls.cols(), 0.01, rng);
  m.head_reg = gaussian(m.head_reg.rows(), m.head_reg.cols(), 0.001, rng);
  return m;
}

double learning_rate(const TrainConfig& config, int iteration) {
  if (config.lr_decay_every <= 0) return config.base_lr;
  const int steps = iteration / config.lr_decay_every;
  return config.base_lr / std::pow(config.lr_decay_factor, steps);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd rpn_design(const FeatureMap& fmap, const DetectorArch& arch) {
  if (fmap.channels() != arch.channels) throw ValidationError("feature map channel count does not match the model");
  const int radius = arch.rpn_window_radius;
  const int dil = arch.rpn_window_dilation;
  const Eigen::Index c = fmap.channels();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fmap.rows) * fmap.cols, arch.rpn_inputs());
  for (int r = 0; r < fmap.rows; ++r) {
    for (int col = 0; col < fmap.cols; ++col) {
      const auto cell = fmap.cell(r, col);
      Eigen::Index offset = 0;
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc, offset += c) {
          const int rr = r + dr * dil, cc = col + dc * dil;
          if (rr < 0 || rr >= fmap.rows || cc < 0 || cc >= fmap.cols) continue;
          x.row(cell).segment(offset, c) = fmap.values.row(fmap.cell(rr, cc));
        }
      }
      x(cell, x.cols() - 1) = 1.0;
    }
  }
  return x;
}

RpnOutput rpn_forward(const DetectorModel& model, const FeatureMap& fmap) {
  check_shapes(model);
  return rpn_from_design(model, rpn_design(fmap, model.arch));
}

std::vector<BoundingBox> propose_regions(const RpnOutput& rpn, std::span<const Anchor> anchors, double image_width,
                                         double image_height, const ProposalOptions& options) {
  const int templates = static_cast<int>(rpn.objectness.cols());
  const auto total = static_cast<std::size_t>(rpn.anchor_count());
  if (anchors.size() != total) throw ValidationError("anchor count does not match RPN output");

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const auto score = [&](std::size_t i) { return rpn.objectness_at(static_cast<Eigen::Index>(i), templates); };
  const auto better = [&](std::size_t a, std::size_t b) {
    const double sa = score(a), sb = score(b);
    return sa != sb ? sa > sb : a < b;
  };
  const std::size_t pre = std::min<std::size_t>(total, static_cast<std::size_t>(std::max(0, options.pre_nms)));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pre), order.end(), better);
  order.resize(pre);

  std::vector<BoundingBox> boxes;
  std::vector<double> scores;
  for (auto i : order) {
    const auto decoded = decode_delta(rpn.delta_at(static_cast<Eigen::Index>(i), templates), anchors[i]);
    const auto clipped = clip_to(decoded, image_width, image_height);
    if (clipped.width < options.min_size || clipped.height < options.min_size) continue;
    boxes.push_back(clipped);
    scores.push_back(score(i));
  }
  const auto keep = nms_indices(boxes, scores, options.nms_iou, static_cast<std::size_t>(std::max(0, options.count)));
  std::vector<BoundingBox> out;
  out.reserve(keep.size());
  for (auto k : keep) out.push_back(boxes[k]);
  return out;
}

Eigen::VectorXd pooled_features(const FeatureMap& fmap, const BoundingBox& box, int grid) {
  const auto bins = roi_pool_bins(box, fmap.stride, grid, std::make_pair(fmap.rows, fmap.cols));
  const Eigen::Index c = fmap.channels();
  Eigen::VectorXd out(static_cast<Eigen::Index>(bins.size()) * c + 1);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const auto& bin = bins[b];
    Eigen::RowVectorXd best = Eigen::RowVectorXd::Constant(c, -std::numeric_limits<double>::infinity());
    for (int r = bin.row_begin; r < bin.row_end; ++r) {
      for (int col = bin.col_begin; col < bin.col_end; ++col) best = best.cwiseMax(fmap.values.row(fmap.cell(r, col)));
    }
    out.segment(static_cast<Eigen::Index>(b) * c, c) = best.transpose();
  }
  out[out.size() - 1] = 1.0;
  return out;
}

HeadOutput head_forward(const DetectorModel& model, const FeatureMap& fmap, std::span<const BoundingBox> proposals,
                        double image_width, double image_height) {
  check_shapes(model);
  const auto& arch = model.arch;
  HeadOutput out;
  out.probabilities.resize(static_cast<Eigen::Index>(proposals.size()), arch.num_classes + 1);
  out.boxes.resize(proposals.size());
  for (std::size_t p = 0; p < proposals.size(); ++p) {
    const Eigen::VectorXd x = pooled_features(fmap, proposals[p], arch.pool_grid);
    const Eigen::VectorXd z = model.head_cls * x;
    Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    e /= e.sum();
    out.probabilities.row(static_cast<Eigen::Index>(p)) = e.transpose();
    const Eigen::VectorXd d = model.head_reg * x;
    for (int k = 0; k < arch.num_classes; ++k) {
      const BoxDelta<double> delta{d[4 * k] * arch.head_delta_std[0], d[4 * k + 1] * arch.head_delta_std[1],
                                   d[4 * k + 2] * arch.head_delta_std[2], d[4 * k + 3] * arch.head_delta_std[3]};
      out.boxes[p].push_back(clip_to(decode_delta(delta, proposals[p]), image_width, image_height));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

LossTerms compute_losses(const DetectorModel& model, const LossInputs& in, ModelGradient* gradient,
                         std::array<ModelGradient, 4>* per_term) {
  check_shapes(model);
  const bool want_grad = gradient != nullptr || per_term != nullptr;
  std::array<ModelGradient, 4> g;
  if (want_grad) g.fill(zero_like(model));

  LossTerms loss;
  const Eigen::Index s = in.rpn_x.rows();
  if (s > 0) {
    Eigen::Index positives = 0;
    for (int l : in.rpn_label) positives += l == 1 ? 1 : 0;
    const double reg_norm = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, positives));
    for (Eigen::Index i = 0; i < s; ++i) {
      const auto x = in.rpn_x.row(i);
      const int t = in.rpn_template[static_cast<std::size_t>(i)];
      const int y = in.rpn_label[static_cast<std::size_t>(i)];
      const double z = model.rpn_cls.row(t).dot(x);
      loss.rpn_cls += (softplus(z) - y * z) / static_cast<double>(s);
      if (want_grad) g[0].rpn_cls.row(t) += (sigmoid(z) - y) / static_cast<double>(s) * x;
      if (y != 1) continue;
      for (int j = 0; j < 4; ++j) {
        const double r = model.rpn_reg.row(4 * t + j).dot(x) - in.rpn_target(i, j);
        loss.rpn_reg += smooth_l1(r) * reg_norm;
        if (want_grad) g[1].rpn_reg.row(4 * t + j) += smooth_l1_grad(r) * reg_norm * x;
      }
    }
  }

  const Eigen::Index p = in.head_x.rows();
  if (p > 0) {
    const double norm = 1.0 / static_cast<double>(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto x = in.head_x.row(i);
      const int label = in.head_label[static_cast<std::size_t>(i)];
      const Eigen::VectorXd z = model.head_cls * x.transpose();
      const double zmax = z.maxCoeff();
      Eigen::VectorXd e = (z.array() - zmax).exp();
      const double sum = e.sum();
      loss.head_cls += (std::log(sum) + zmax - z[label]) * norm;
      if (want_grad) {
        e /= sum;
        e[label] -= 1.0;
        g[2].head_cls.noalias() += norm * e * x;
      }
      if (label < 1) continue;
      for (int j = 0; j < 4; ++j) {
        const Eigen::Index row = 4 * (label - 1) + j;
        const double r = model.head_reg.row(row).dot(x) - in.head_target(i, j);
        loss.head_reg += smooth_l1(r) * norm;
        if (want_grad) g[3].head_reg.row(row) += smooth_l1_grad(r) * norm * x;
      }
    }
  }

  if (gradient) {
    *gradient = zero_like(model);
    for (const auto& term : g) {
      gradient->rpn_cls += term.rpn_cls;
      gradient->rpn_reg += term.rpn_reg;
      gradient->head_cls += term.head_cls;
      gradient->head_reg += term.head_reg;
    }
  }
  if (per_term) *per_term = std::move(g);
  return loss;
}

TrainingImage prepare_training_image(const Raster& raster, std::span<const BoundingBox> boxes,
                                     std::span<const int> classes, const DetectorArch& arch,
                                     const TrainConfig& config, std::shared_ptr<const std::vector<Anchor>> shared_anchors) {
  if (boxes.size() != classes.size()) throw ValidationError("boxes and classes differ in length");
  for (int c : classes) {
    if (c < 1 || c > arch.num_classes) throw ValidationError("gt class outside [1, K]");
  }
  const auto resized = resize_for_detection(raster, boxes, arch.max_side);
  TrainingImage img;
  img.fmap = compute_feature_map(resized.raster, {.stride = arch.stride});
  img.width = static_cast<double>(resized.raster.cols());
  img.height = static_cast<double>(resized.raster.rows());
  img.gt_boxes = resized.boxes;
  img.gt_classes.assign(classes.begin(), classes.end());

  const std::size_t expected = static_cast<std::size_t>(img.fmap.rows) * img.fmap.cols * arch.templates.size();
  if (shared_anchors && shared_anchors->size() == expected && !shared_anchors->empty() &&
      shared_anchors->back().row == img.fmap.rows - 1 && shared_anchors->back().col == img.fmap.cols - 1) {
    img.anchors = std::move(shared_anchors);
  } else {
    img.anchors = std::make_shared<const std::vector<Anchor>>(
        generate_anchors(img.fmap.rows, img.fmap.cols, arch.stride, arch.templates));
  }

  AssignOptions opt;
  opt.pos_iou = config.rpn_pos_iou;
  opt.neg_iou = config.rpn_neg_iou;
  opt.image_extent = std::make_pair(img.width, img.height);
  const auto labels = assign_anchors(*img.anchors, img.gt_boxes, opt);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].label == AnchorLabel::kPositive) {
      img.positive_anchors.push_back(static_cast<std::int32_t>(i));
      img.positive_gt.push_back(labels[i].gt_index);
    } else if (labels[i].label == AnchorLabel::kNegative) {
      img.negative_anchors.push_back(static_cast<std::int32_t>(i));
    }
  }
  return img;
}

LossInputs sample_minibatch(const DetectorModel& model, std::span<const TrainingImage* const> batch,
                            const TrainConfig& config, std::mt19937_64& rng) {
  check_shapes(model);
  const auto& arch = model.arch;
  const int templates = arch.template_count();

  std::vector<Eigen::VectorXd> rpn_rows, head_rows;
  LossInputs in;
  std::vector<BoxDelta<double>> rpn_targets, head_targets;

  for (const TrainingImage* img : batch) {
    const Eigen::MatrixXd design = rpn_design(img->fmap, arch);

    // Anchors: positives capped at half the budget, negatives fill the rest.
    std::vector<std::size_t> pos_slots(img->positive_anchors.size());
    std::iota(pos_slots.begin(), pos_slots.end(), 0);
    const auto pos = sample_without_replacement(pos_slots, static_cast<std::size_t>(config.rpn_batch / 2), rng);
    const auto neg = sample_without_replacement(img->negative_anchors,
                                                static_cast<std::size_t>(config.rpn_batch) - pos.size(), rng);
    for (auto slot : pos) {
      const auto a = static_cast<std::size_t>(img->positive_anchors[slot]);
      rpn_rows.push_back(design.row(static_cast<Eigen::Index>(a) / templates).transpose());
      in.rpn_template.push_back(static_cast<int>(a % static_cast<std::size_t>(templates)));
      in.rpn_label.push_back(1);
      rpn_targets.push_back(encode_delta(img->gt_boxes[static_cast<std::size_t>(img->positive_gt[slot])], (*img->anchors)[a]));
    }
    for (auto a32 : neg) {
      const auto a = static_cast<std::size_t>(a32);
      rpn_rows.push_back(design.row(static_cast<Eigen::Index>(a) / templates).transpose());
      in.rpn_template.push_back(static_cast<int>(a % static_cast<std::size_t>(templates)));
      in.rpn_label.push_back(0);
      rpn_targets.push_back({});
    }

    // RoIs: current proposals plus the ground truth boxes.
    const auto rpn = rpn_from_design(model, design);
    auto candidates = propose_regions(rpn, *img->anchors, img->width, img->height,
                                      {config.train_post_nms, config.rpn_nms_iou, config.train_pre_nms, 4.0});
    candidates.insert(candidates.end(), img->gt_boxes.begin(), img->gt_boxes.end());
    std::vector<std::size_t> fg, bg;
    std::vector<int> best_gt(candidates.size(), -1);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double best = 0;
      for (std::size_t g = 0; g < img->gt_boxes.size(); ++g) {
        const double v = iou(candidates[c], img->gt_boxes[g]);
        if (v > best) {
          best = v;
          best_gt[c] = static_cast<int>(g);
        }
      }
      (best >= config.fg_iou ? fg : bg).push_back(c);
    }
    const auto fg_cap = static_cast<std::size_t>(std::lround(config.fg_fraction * config.proposals_per_image));
    const auto fg_pick = sample_without_replacement(fg, fg_cap, rng);
    const auto bg_pick = sample_without_replacement(
        bg, static_cast<std::size_t>(config.proposals_per_image) - fg_pick.size(), rng);
    for (auto c : fg_pick) {
      const auto g = static_cast<std::size_t>(best_gt[c]);
      head_rows.push_back(pooled_features(img->fmap, candidates[c], arch.pool_grid));
      in.head_label.push_back(img->gt_classes[g]);
      auto d = encode_delta(img->gt_boxes[g], candidates[c]);
      d.tx /= arch.head_delta_std[0];
      d.ty /= arch.head_delta_std[1];
      d.tw /= arch.head_delta_std[2];
      d.th /= arch.head_delta_std[3];
      head_targets.push_back(d);
    }
    for (auto c : bg_pick) {
      head_rows.push_back(pooled_features(img->fmap, candidates[c], arch.pool_grid));
      in.head_label.push_back(0);
      head_targets.push_back({});
    }
  }

  auto stack = [](const std::vector<Eigen::VectorXd>& rows, Eigen::Index width) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), width);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return m;
  };
  auto targets = [](const std::vector<BoxDelta<double>>& ds) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ds.size()), 4);
    for (std::size_t i = 0; i < ds.size(); ++i) m.row(static_cast<Eigen::Index>(i)) << ds[i].tx, ds[i].ty, ds[i].tw, ds[i].th;
    return m;
  };
  in.rpn_x = stack(rpn_rows, arch.rpn_inputs());
  in.rpn_target = targets(rpn_targets);
  in.head_x = stack(head_rows, arch.head_inputs());
  in.head_target = targets(head_targets);
  return in;
}

LossTerms train_step(DetectorModel& model, SgdState& state, std::span<const TrainingImage* const> batch, double lr,
                     const TrainConfig& config, std::mt19937_64& rng) {
  const LossInputs in = sample_minibatch(model, batch, config, rng);
  ModelGradient grad;
  const LossTerms loss = compute_losses(model, in, &grad);
  const std::array<std::pair<const char*, double>, 4> terms{
      {{"rpn_cls", loss.rpn_cls}, {"rpn_reg", loss.rpn_reg}, {"head_cls", loss.head_cls}, {"head_reg", loss.head_reg}}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) throw TrainingError(std::string("non-finite ") + name + " loss");
  }
  if (state.velocity.rpn_cls.size() == 0) state.velocity = zero_like(model);

  auto update = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& v, const Eigen::MatrixXd& g) {
    v = config.momentum * v - lr * (g + config.weight_decay * w);
    w += v;
  };
  update(model.rpn_cls, state.velocity.rpn_cls, grad.rpn_cls);
  update(model.rpn_reg, state.velocity.rpn_reg, grad.rpn_reg);
  update(model.head_cls, state.velocity.head_cls, grad.head_cls);
  update(model.head_reg, state.velocity.head_reg, grad.head_reg);
  return loss;
}

DetectorModel train(DetectorModel model, std::span<const TrainingImage> dataset, const TrainConfig& config) {
  if (config.max_iterations <= 0) return model;
  if (dataset.empty()) throw ValidationError("training set is empty");
  if (config.images_per_batch < 1 || config.proposals_per_image < 1 || config.rpn_batch < 1) {
    throw ValidationError("batch sizes must be positive");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  SgdState state;
  const std::size_t per_batch = std::min(order.size(), static_cast<std::size_t>(config.images_per_batch));
  std::vector<const TrainingImage*> batch(per_batch);
  for (int it = 0; it < config.max_iterations; ++it) {
    for (auto& slot : batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      slot = &dataset[order[cursor++]];
    }
    model.training_log.push_back(train_step(model, state, batch, learning_rate(config, it), config, rng));
  }
  return model;
}

std::vector<Detection> detect(const DetectorModel& model, const Raster& image, const TrainConfig& config) {
  check_shapes(model);
  const auto& arch = model.arch;
  const auto resized = resize_for_detection(image, {}, arch.max_side);
  const auto fmap = compute_feature_map(resized.raster, {.stride = arch.stride});
  const auto anchors = generate_anchors(fmap.rows, fmap.cols, arch.stride, arch.templates);
  const double w = static_cast<double>(resized.raster.cols());
  const double h = static_cast<double>(resized.raster.rows());
  const auto rpn = rpn_forward(model, fmap);
  const auto proposals =
      propose_regions(rpn, anchors, w, h, {config.test_proposals, config.rpn_nms_iou, config.test_pre_nms, 4.0});
  const auto head = head_forward(model, fmap, proposals, w, h);

  std::vector<Detection> candidates;
  for (std::size_t p = 0; p < proposals.size(); ++p) {
    for (int k = 1; k <= arch.num_classes; ++k) {
      const double score = head.probabilities(static_cast<Eigen::Index>(p), k);
      const auto& box = head.boxes[p][static_cast<std::size_t>(k - 1)];
      if (score <= 0.01 || !box.valid()) continue;
      candidates.push_back({box, k, score});
    }
  }
  auto kept = select_detections(nms(candidates, config.detection_nms_iou, config.class_wise_nms),
                                config.max_detections, config.min_score);
  for (auto& d : kept) d.box = d.box.scaled(1.0 / resized.scale);
  return kept;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'L', 'K', 'D', 'E', 'T', 'M', 'D', 'L'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated checkpoint header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated checkpoint data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_block(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

void get_block(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_f64(in);
  }
}

}  // namespace

void save_checkpoint(const DetectorModel& model, std::ostream& out) {
  check_shapes(model);
  const auto& a = model.arch;
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(a.channels));
  put_u32(out, static_cast<std::uint32_t>(a.num_classes));
  put_u32(out, static_cast<std::uint32_t>(a.template_count()));
  put_u32(out, static_cast<std::uint32_t>(a.rpn_window_radius));
  put_u32(out, static_cast<std::uint32_t>(a.rpn_window_dilation));
  put_u32(out, static_cast<std::uint32_t>(a.pool_grid));
  put_u32(out, static_cast<std::uint32_t>(a.max_side));
  put_f64(out, a.stride);
  for (double s : a.head_delta_std) put_f64(out, s);
  for (const auto& t : a.templates) {
    put_f64(out, t.scale);
    put_f64(out, t.ratio);
  }
  put_block(out, model.rpn_cls);
  put_block(out, model.rpn_reg);
  put_block(out, model.head_cls);
  put_block(out, model.head_reg);
  if (!out) throw IoError("failed writing checkpoint");
}

DetectorModel load_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError("not a lesionkit detector checkpoint");
  }
  const auto version = get_u32(in);
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  DetectorArch a;
  a.channels = static_cast<int>(get_u32(in));
  a.num_classes = static_cast<int>(get_u32(in));
  const auto templates = get_u32(in);
  a.rpn_window_radius = static_cast<int>(get_u32(in));
  a.rpn_window_dilation = static_cast<int>(get_u32(in));
  a.pool_grid = static_cast<int>(get_u32(in));
  a.max_side = static_cast<int>(get_u32(in));
  if (a.channels < 1 || a.channels > 1024 || a.num_classes < 1 || a.num_classes > 4096 || templates < 1 ||
      templates > 1024 || a.pool_grid < 1 || a.pool_grid > 64 || a.rpn_window_radius > 16) {
    throw IoError("checkpoint header is corrupt");
  }
  a.stride = get_f64(in);
  for (double& s : a.head_delta_std) s = get_f64(in);
  a.templates.clear();
  for (std::uint32_t t = 0; t < templates; ++t) {
    const double scale = get_f64(in);
    const double ratio = get_f64(in);
    a.templates.push_back({scale, ratio});
  }
  DetectorModel m;
  try {
    m = DetectorModel::zeros(a);
  } catch (const ValidationError& e) {
    throw IoError(std::string("checkpoint header is corrupt: ") + e.what());
  }
  get_block(in, m.rpn_cls);
  get_block(in, m.rpn_reg);
  get_block(in, m.head_cls);
  get_block(in, m.head_reg);
  return m;
}

void save_checkpoint(const DetectorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  save_checkpoint(model, out);
}

DetectorModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  return load_checkpoint(in);
}

}  // namespace lesionkit
