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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include <Eigen/Core>

namespace lesionkit {

/// Row-major grayscale image: rows = height, cols = width.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 16-bit CT-window-mapped raster.
using Raster = Image<std::uint16_t>;
using ImageD = Image<double>;

inline int width_of(const Raster& r) { return static_cast<int>(r.cols()); }
inline int height_of(const Raster& r) { return static_cast<int>(r.rows()); }

/// Round and clamp to the 16-bit range.
template <typename Derived>
Raster to_raster(const Eigen::ArrayBase<Derived>& img) {
  return img.round().max(0.0).min(65535.0).template cast<std::uint16_t>();
}

/// Bilinear resampling with half-pixel-centre alignment. Source sample
/// positions are clamped to the image, so constant inputs stay exact.
template <typename Derived>
ImageD resize_bilinear(const Eigen::ArrayBase<Derived>& src, Eigen::Index out_rows, Eigen::Index out_cols) {
  const Eigen::Index in_rows = src.rows();
  const Eigen::Index in_cols = src.cols();
  ImageD out(out_rows, out_cols);
  const double sy = static_cast<double>(in_rows) / static_cast<double>(out_rows);
  const double sx = static_cast<double>(in_cols) / static_cast<double>(out_cols);
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_rows - 1));
    const auto y0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index y1 = std::min(y0 + 1, in_rows - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index c = 0; c < out_cols; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_cols - 1));
      const auto x0 = static_cast<Eigen::Index>(fx);
      const Eigen::Index x1 = std::min(x0 + 1, in_cols - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * static_cast<double>(src(y0, x0)) + wx * static_cast<double>(src(y0, x1));
      const double bot = (1.0 - wx) * static_cast<double>(src(y1, x0)) + wx * static_cast<double>(src(y1, x1));
      out(r, c) = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
void write_pgm(const Raster& raster, std::ostream& out);
Raster read_pgm(std::istream& in);
void write_pgm(const Raster& raster, const std::filesystem::path& path);
Raster read_pgm(const std::filesystem::path& path);

}  // namespace lesionkit
