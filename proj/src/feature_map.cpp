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

#include "lesionkit/feature_map.hpp"

#include <cmath>
#include <vector>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

ImageD laplacian(const ImageD& img) {
  const Eigen::Index h = img.rows(), w = img.cols();
  ImageD out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      out(r, c) = img(reflect(r - 1, h), c) + img(reflect(r + 1, h), c) + img(r, reflect(c - 1, w)) +
                  img(r, reflect(c + 1, w)) - 4.0 * img(r, c);
    }
  }
  return out;
}

}  // namespace

ImageD gaussian_blur(const ImageD& img, double sigma) {
  if (!(sigma > 0)) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[static_cast<std::size_t>(i + radius)];
  }
  for (double& v : k) v /= total;

  const Eigen::Index h = img.rows(), w = img.cols();
  ImageD tmp(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * img(r, reflect(c + i, w));
      tmp(r, c) = acc;
    }
  }
  ImageD out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * tmp(reflect(r + i, h), c);
      out(r, c) = acc;
    }
  }
  return out;
}

FeatureMap compute_feature_map(const Raster& image, const FeatureMapOptions& options) {
  if (image.size() == 0) throw ValidationError("cannot compute features of an empty image");
  if (!(options.stride >= 1)) throw ValidationError("feature stride must be >= 1");
  const Eigen::Index h = image.rows(), w = image.cols();
  const ImageD img = image.cast<double>() / 65535.0;

  ImageD gx(h, w), gy(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      gx(r, c) = 0.5 * std::abs(img(r, reflect(c + 1, w)) - img(r, reflect(c - 1, w)));
      gy(r, c) = 0.5 * std::abs(img(reflect(r + 1, h), c) - img(reflect(r - 1, h), c));
    }
  }
  const double sf = options.log_sigma_fine, sc = options.log_sigma_coarse;
  const ImageD log_fine = laplacian(gaussian_blur(img, sf)) * (sf * sf);
  const ImageD log_coarse = laplacian(gaussian_blur(img, sc)) * (sc * sc);

  FeatureMap fm;
  fm.stride = options.stride;
  fm.rows = static_cast<int>(std::ceil(static_cast<double>(h) / options.stride));
  fm.cols = static_cast<int>(std::ceil(static_cast<double>(w) / options.stride));
  fm.values.resize(static_cast<Eigen::Index>(fm.rows) * fm.cols, kFeatureChannels);

  for (int r = 0; r < fm.rows; ++r) {
    const auto y0 = static_cast<Eigen::Index>(std::floor(r * options.stride));
    const auto y1 = std::min(h, static_cast<Eigen::Index>(std::floor((r + 1) * options.stride)));
    for (int c = 0; c < fm.cols; ++c) {
      const auto x0 = static_cast<Eigen::Index>(std::floor(c * options.stride));
      const auto x1 = std::min(w, static_cast<Eigen::Index>(std::floor((c + 1) * options.stride)));
      const auto bh = y1 - y0, bw = x1 - x0;
      const double n = static_cast<double>(bh * bw);
      const auto block = img.block(y0, x0, bh, bw);
      const double mean = block.sum() / n;
      const double var = std::max(0.0, (block - mean).square().sum() / n);
      auto row = fm.values.row(fm.cell(r, c));
      row[kMeanIntensity] = mean;
      row[kIntensityStd] = std::sqrt(var);
      row[kGradX] = gx.block(y0, x0, bh, bw).sum() / n;
      row[kGradY] = gy.block(y0, x0, bh, bw).sum() / n;
      row[kLogFine] = log_fine.block(y0, x0, bh, bw).sum() / n;
      row[kLogCoarse] = log_coarse.block(y0, x0, bh, bw).sum() / n;
    }
  }

  if (options.standardize) {
    for (Eigen::Index ch = 0; ch < fm.values.cols(); ++ch) {
      auto col = fm.values.col(ch);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      if (sd > 1e-12) {
        col = (col.array() - mean) / sd;
      } else {
        col.setZero();
      }
    }
  }
  return fm;
}

}  // namespace lesionkit
