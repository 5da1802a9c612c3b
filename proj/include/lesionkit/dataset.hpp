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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lesionkit/bookmark.hpp"
#include "lesionkit/box.hpp"
#include "lesionkit/raster.hpp"

namespace lesionkit {

// ---------------------------------------------------------------------------
// Splitting

/// Largest-remainder apportionment of `n` items over `fractions`; ties in
/// the remainder go to the earlier entry. The result sums to `n` exactly.
std::vector<std::size_t> apportion(std::size_t n, std::span<const double> fractions);

struct SplitFractions {
  double train{0.70};
  double val{0.15};
  double test{0.15};
};

struct SplitManifest {
  std::string split_name;  // train | val | test
  std::vector<StudyKey> members;
  std::uint64_t seed{0};
};

/// Patient-level split. Unique patient ids are sorted, shuffled with `seed`
/// and apportioned; every record follows its patient. Throws
/// ValidationError on fewer than three patients or fractions not summing to 1.
std::array<SplitManifest, 3> split_patients(std::span<const StudyKey> records, SplitFractions fractions,
                                            std::uint64_t seed);
std::array<SplitManifest, 3> split_patients(std::span<const BookmarkRecord> records, SplitFractions fractions,
                                            std::uint64_t seed);

/// Split manifest CSV: split,patient_id,study_id,image_id
void write_split_manifest(std::span<const SplitManifest> splits, std::ostream& out);
std::vector<SplitManifest> read_split_manifest(std::istream& in);

struct IterationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Patch-level 75/10/15 shuffle split used inside each categorization
/// iteration. Requires at least 10 patches.
IterationSplit split_for_iteration(std::size_t patch_count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Patches and detection-scale images

inline constexpr int kDefaultEncoderSide = 64;

struct LesionPatch {
  StudyKey source;
  BoundingBox box;
  Raster pixels;  // out_side x out_side
  std::optional<int> pseudo_label;
};

/// Crop `box` (rounded outward to whole pixels) out of `slide` and resample
/// to out_side x out_side. Throws ValidationError if the box leaves the slide.
Raster crop_patch(const Raster& slide, const BoundingBox& box, int out_side = kDefaultEncoderSide);

struct ResizedImage {
  Raster raster;
  std::vector<BoundingBox> boxes;
  double scale{1.0};
};

inline constexpr int kDefaultDetectionSide = 512;

/// Isotropic resize so the longest side equals max_side. Output size is
/// round(width * s) x round(height * s); boxes are multiplied by s.
ResizedImage resize_for_detection(const Raster& slide, std::span<const BoundingBox> boxes,
                                  int max_side = kDefaultDetectionSide);

// ---------------------------------------------------------------------------
// Synthetic studies

/// Generative appearance of one lesion class.
struct SyntheticClass {
  std::string name;
  double intensity_offset{8000};  // signed, relative to background
  double texture_frequency{0};    // cycles per pixel along the major axis
  double texture_amplitude{0};
  double core_offset{0};          // added inside half the radius (ring / target shapes)
  double eccentricity{1.0};       // major / minor axis ratio, >= 1
  double radius_min{14};          // geometric-mean radius, pixels
  double radius_max{24};
};

struct SyntheticSpec {
  int width{512};
  int height{512};
  double background{20000};
  double noise_sigma{1000};
  double ripple_amplitude{1000};  // low-frequency background structure
  double contrast{4000};          // every class must satisfy |offset| >= contrast
  std::vector<SyntheticClass> classes;
  int lesions_min{1};
  int lesions_max{1};
  double padding{kDefaultPadding};
  double max_overlap_iou{0.1};
  int max_retries{200};
};

struct SyntheticLesion {
  BoundingBox box;  // tight ellipse box dilated by padding, whole pixels
  int true_class{0};
  DiameterPair diameters;  // major and minor axes
};

struct SyntheticStudy {
  Raster raster;
  std::vector<SyntheticLesion> lesions;
};

/// Throws ValidationError on an inconsistent spec.
void validate(const SyntheticSpec& spec);

/// Deterministic in (spec, seed). The lesion count is drawn from
/// [lesions_min, lesions_max]; classes are drawn uniformly unless
/// `forced_class` is set. Throws ValidationError when lesions cannot be
/// placed within the overlap bound after max_retries attempts.
SyntheticStudy generate_synthetic_study(const SyntheticSpec& spec, std::uint64_t seed,
                                        std::optional<int> forced_class = std::nullopt);

/// Five classes separated by intensity and core structure on a 512 x 512 canvas; the default used
/// by the CLI and the benchmarks.
SyntheticSpec default_synthetic_spec();

}  // namespace lesionkit
