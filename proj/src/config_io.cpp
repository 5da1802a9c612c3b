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

#include "lesionkit/config_io.hpp"

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

LdpoConfig ldpo_config_from_json(const nlohmann::json& j) {
  LdpoConfig c;
  if (j.contains("k_range")) {
    const auto& r = j.at("k_range");
    if (!r.is_array() || r.size() != 2) throw ValidationError("k_range must be [k_min, k_max]");
    c.k_min = r[0].get<int>();
    c.k_max = r[1].get<int>();
  }
  read(j, "threshold", c.threshold);
  read(j, "max_iter", c.max_iter);
  read(j, "seed", c.seed);
  read(j, "min_patches", c.min_patches);
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    read(e, "hidden", c.hidden_units);
    read(e, "epochs", c.encoder.epochs);
    read(e, "batch_size", c.encoder.batch_size);
    read(e, "learning_rate", c.encoder.learning_rate);
  }
  if (j.contains("kmeans")) {
    const auto& k = j.at("kmeans");
    read(k, "max_iter", c.kmeans.max_iter);
    read(k, "tol", c.kmeans.tol);
    read(k, "n_init", c.kmeans.n_init);
  }
  return c;
}

nlohmann::json to_json(const LdpoConfig& c) {
  return {{"k_range", {c.k_min, c.k_max}},
          {"threshold", c.threshold},
          {"max_iter", c.max_iter},
          {"seed", c.seed},
          {"min_patches", c.min_patches},
          {"encoder",
           {{"hidden", c.hidden_units},
            {"epochs", c.encoder.epochs},
            {"batch_size", c.encoder.batch_size},
            {"learning_rate", c.encoder.learning_rate}}},
          {"kmeans", {{"max_iter", c.kmeans.max_iter}, {"tol", c.kmeans.tol}, {"n_init", c.kmeans.n_init}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  read(j, "images_per_batch", c.images_per_batch);
  read(j, "proposals_per_image", c.proposals_per_image);
  read(j, "base_lr", c.base_lr);
  read(j, "lr_decay_factor", c.lr_decay_factor);
  read(j, "lr_decay_every", c.lr_decay_every);
  read(j, "max_iterations", c.max_iterations);
  read(j, "seed", c.seed);
  read(j, "momentum", c.momentum);
  read(j, "weight_decay", c.weight_decay);
  read(j, "rpn_batch", c.rpn_batch);
  read(j, "rpn_pos_iou", c.rpn_pos_iou);
  read(j, "rpn_neg_iou", c.rpn_neg_iou);
  read(j, "fg_iou", c.fg_iou);
  read(j, "fg_fraction", c.fg_fraction);
  read(j, "train_pre_nms", c.train_pre_nms);
  read(j, "train_post_nms", c.train_post_nms);
  read(j, "rpn_nms_iou", c.rpn_nms_iou);
  read(j, "test_pre_nms", c.test_pre_nms);
  read(j, "test_proposals", c.test_proposals);
  read(j, "detection_nms_iou", c.detection_nms_iou);
  read(j, "class_wise_nms", c.class_wise_nms);
  read(j, "max_detections", c.max_detections);
  read(j, "min_score", c.min_score);
  if (c.images_per_batch < 1 || c.proposals_per_image < 1 || c.base_lr <= 0 || c.lr_decay_factor <= 0 ||
      c.max_iterations < 0 || c.rpn_batch < 1) {
    throw ValidationError("training config values must be positive");
  }
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"images_per_batch", c.images_per_batch},
          {"proposals_per_image", c.proposals_per_image},
          {"base_lr", c.base_lr},
          {"lr_decay_factor", c.lr_decay_factor},
          {"lr_decay_every", c.lr_decay_every},
          {"max_iterations", c.max_iterations},
          {"seed", c.seed},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"rpn_batch", c.rpn_batch},
          {"rpn_pos_iou", c.rpn_pos_iou},
          {"rpn_neg_iou", c.rpn_neg_iou},
          {"fg_iou", c.fg_iou},
          {"fg_fraction", c.fg_fraction},
          {"train_pre_nms", c.train_pre_nms},
          {"train_post_nms", c.train_post_nms},
          {"rpn_nms_iou", c.rpn_nms_iou},
          {"test_pre_nms", c.test_pre_nms},
          {"test_proposals", c.test_proposals},
          {"detection_nms_iou", c.detection_nms_iou},
          {"class_wise_nms", c.class_wise_nms},
          {"max_detections", c.max_detections},
          {"min_score", c.min_score}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s = default_synthetic_spec();
  read(j, "width", s.width);
  read(j, "height", s.height);
  read(j, "background", s.background);
  read(j, "noise_sigma", s.noise_sigma);
  read(j, "ripple_amplitude", s.ripple_amplitude);
  read(j, "contrast", s.contrast);
  read(j, "lesions_min", s.lesions_min);
  read(j, "lesions_max", s.lesions_max);
  read(j, "padding", s.padding);
  read(j, "max_overlap_iou", s.max_overlap_iou);
  read(j, "max_retries", s.max_retries);
  if (j.contains("classes")) {
    s.classes.clear();
    for (const auto& c : j.at("classes")) {
      SyntheticClass k;
      read(c, "name", k.name);
      read(c, "intensity_offset", k.intensity_offset);
      read(c, "texture_frequency", k.texture_frequency);
      read(c, "texture_amplitude", k.texture_amplitude);
      read(c, "core_offset", k.core_offset);
      read(c, "eccentricity", k.eccentricity);
      read(c, "radius_min", k.radius_min);
      read(c, "radius_max", k.radius_max);
      s.classes.push_back(k);
    }
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const SyntheticSpec& s) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : s.classes) {
    classes.push_back({{"name", c.name},
                       {"intensity_offset", c.intensity_offset},
                       {"texture_frequency", c.texture_frequency},
                       {"texture_amplitude", c.texture_amplitude},
                       {"core_offset", c.core_offset},
                       {"eccentricity", c.eccentricity},
                       {"radius_min", c.radius_min},
                       {"radius_max", c.radius_max}});
  }
  return {{"width", s.width},
          {"height", s.height},
          {"background", s.background},
          {"noise_sigma", s.noise_sigma},
          {"ripple_amplitude", s.ripple_amplitude},
          {"contrast", s.contrast},
          {"lesions_min", s.lesions_min},
          {"lesions_max", s.lesions_max},
          {"padding", s.padding},
          {"max_overlap_iou", s.max_overlap_iou},
          {"max_retries", s.max_retries},
          {"classes", classes}};
}

}  // namespace lesionkit
