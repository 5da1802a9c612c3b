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

#include <Eigen/Core>

#include "lesionkit/kmeans.hpp"
#include "lesionkit/raster.hpp"

namespace lesionkit {

/// Channel layout of the fixed filter bank.
enum FeatureChannel : int {
  kMeanIntensity = 0,
  kIntensityStd = 1,
  kGradX = 2,  // mean |dI/dx|
  kGradY = 3,  // mean |dI/dy|
  kLogFine = 4,
  kLogCoarse = 5,
  kFeatureChannels = 6,
};

/// Per-cell channel values on a stride grid. `values` holds one row per
/// cell in row-major cell order and one column per channel.
struct FeatureMap {
  int rows{0};
  int cols{0};
  double stride{8};
  FeatureMatrix<double> values;

  int channels() const { return static_cast<int>(values.cols()); }
  Eigen::Index cell(int r, int c) const { return static_cast<Eigen::Index>(r) * cols + c; }
};

struct FeatureMapOptions {
  double stride{8};
  double log_sigma_fine{3.0};
  double log_sigma_coarse{8.0};
  bool standardize{true};  // zero mean, unit variance per channel and image
};

/// Fixed filter bank pooled over each stride x stride cell: mean and std of
/// intensity, mean absolute horizontal and vertical gradients, and the mean
/// scale-normalized Laplacian-of-Gaussian at two scales. Intensities are
/// scaled to [0, 1]. Channels with zero variance standardize to zero.
FeatureMap compute_feature_map(const Raster& image, const FeatureMapOptions& options = {});

/// Separable Gaussian blur with reflected borders.
ImageD gaussian_blur(const ImageD& img, double sigma);

}  // namespace lesionkit
