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

#include "lesionkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "lesionkit/csv.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

std::vector<std::size_t> apportion(std::size_t n, std::span<const double> fractions) {
  double total = 0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ValidationError("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");

  std::vector<std::size_t> sizes(fractions.size());
  std::vector<double> remainders(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double quota = fractions[i] * static_cast<double>(n);
    // Guard against quotas like 6.9999999999 that are integral in exact arithmetic.
    double whole = std::floor(quota + 1e-9);
    sizes[i] = static_cast<std::size_t>(whole);
    remainders[i] = std::max(0.0, quota - whole);
    assigned += sizes[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b] + 1e-12; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % order.size()) {
    ++sizes[order[i]];
    ++assigned;
  }
  return sizes;
}

std::array<SplitManifest, 3> split_patients(std::span<const StudyKey> records, SplitFractions fractions,
                                            std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& r : records) unique.insert(r.patient_id);
  if (unique.size() < 3) throw ValidationError("patient-level split needs at least 3 distinct patients");

  std::vector<std::string> patients(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::shuffle(patients.begin(), patients.end(), rng);

  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  const auto sizes = apportion(patients.size(), f);

  std::map<std::string, std::size_t> split_of;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < sizes[s]; ++i) split_of[patients[pos++]] = s;
  }

  std::array<SplitManifest, 3> out{SplitManifest{"train", {}, seed}, SplitManifest{"val", {}, seed},
                                   SplitManifest{"test", {}, seed}};
  for (const auto& r : records) out[split_of.at(r.patient_id)].members.push_back(r);
  return out;
}

std::array<SplitManifest, 3> split_patients(std::span<const BookmarkRecord> records, SplitFractions fractions,
                                            std::uint64_t seed) {
  std::vector<StudyKey> keys;
  keys.reserve(records.size());
  for (const auto& r : records) keys.push_back(r.key);
  return split_patients(std::span<const StudyKey>(keys), fractions, seed);
}

namespace {
constexpr const char* kSplitHeader = "split,patient_id,study_id,image_id";
}

void write_split_manifest(std::span<const SplitManifest> splits, std::ostream& out) {
  out << kSplitHeader << '\n';
  for (const auto& s : splits) {
    for (const auto& m : s.members) {
      out << s.split_name << ',' << csv::checked_field(m.patient_id) << ',' << csv::checked_field(m.study_id)
          << ',' << csv::checked_field(m.image_id) << '\n';
    }
  }
}

std::vector<SplitManifest> read_split_manifest(std::istream& in) {
  std::vector<SplitManifest> out{{"train", {}, 0}, {"val", {}, 0}, {"test", {}, 0}};
  for (const auto& f : csv::read_table(in, kSplitHeader)) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SplitManifest& s) { return s.split_name == f[0]; });
    if (it == out.end()) throw IoError("unknown split name '" + f[0] + "'");
    it->members.push_back({f[1], f[2], f[3]});
  }
  return out;
}

IterationSplit split_for_iteration(std::size_t patch_count, std::uint64_t seed) {
  if (patch_count < 10) throw ValidationError("iteration split needs at least 10 patches");
  std::vector<std::size_t> idx(patch_count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::array<double, 3> f{0.75, 0.10, 0.15};
  const auto sizes = apportion(patch_count, f);
  IterationSplit s;
  auto it = idx.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
  it += static_cast<std::ptrdiff_t>(sizes[0]);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
  it += static_cast<std::ptrdiff_t>(sizes[1]);
  s.test.assign(it, idx.end());
  return s;
}

Raster crop_patch(const Raster& slide, const BoundingBox& box, int out_side) {
  if (out_side < 1) throw ValidationError("patch side must be positive");
  const auto x0 = static_cast<Eigen::Index>(std::floor(box.left_x));
  const auto y0 = static_cast<Eigen::Index>(std::floor(box.top_y));
  const auto x1 = static_cast<Eigen::Index>(std::ceil(box.right()));
  const auto y1 = static_cast<Eigen::Index>(std::ceil(box.bottom()));
  if (x0 < 0 || y0 < 0 || x1 > slide.cols() || y1 > slide.rows() || x1 <= x0 || y1 <= y0) {
    throw ValidationError("crop box is not inside the slide");
  }
  const auto region = slide.block(y0, x0, y1 - y0, x1 - x0);
  if (region.rows() == out_side && region.cols() == out_side) return region;
  return to_raster(resize_bilinear(region, out_side, out_side));
}

ResizedImage resize_for_detection(const Raster& slide, std::span<const BoundingBox> boxes, int max_side) {
  if (slide.size() == 0) throw ValidationError("cannot resize an empty raster");
  if (max_side < 1) throw ValidationError("max_side must be positive");
  const double longest = static_cast<double>(std::max(slide.rows(), slide.cols()));
  ResizedImage out;
  out.scale = static_cast<double>(max_side) / longest;
  const auto rows = std::max<Eigen::Index>(1, std::lround(static_cast<double>(slide.rows()) * out.scale));
  const auto cols = std::max<Eigen::Index>(1, std::lround(static_cast<double>(slide.cols()) * out.scale));
  out.raster = (rows == slide.rows() && cols == slide.cols()) ? slide : to_raster(resize_bilinear(slide, rows, cols));
  out.boxes.reserve(boxes.size());
  for (const auto& b : boxes) out.boxes.push_back(b.scaled(out.scale));
  return out;
}

// ---------------------------------------------------------------------------

void validate(const SyntheticSpec& spec) {
  if (spec.width < 16 || spec.height < 16) throw ValidationError("synthetic raster must be at least 16x16");
  if (spec.lesions_min < 0 || spec.lesions_max < spec.lesions_min) throw ValidationError("bad lesion count range");
  if (spec.lesions_max > 0 && spec.classes.empty()) throw ValidationError("synthetic spec needs at least one class");
  if (!(spec.padding >= 1.0)) throw ValidationError("padding must be >= 1");
  if (spec.noise_sigma < 0 || spec.ripple_amplitude < 0) throw ValidationError("noise levels must be non-negative");
  for (const auto& c : spec.classes) {
    if (std::abs(c.intensity_offset) < spec.contrast) {
      throw ValidationError("class '" + c.name + "' has |intensity_offset| below the configured contrast");
    }
    if (c.eccentricity < 1.0) throw ValidationError("eccentricity must be >= 1");
    if (!(c.radius_min > 0) || c.radius_max < c.radius_min) throw ValidationError("bad radius range");
    if (c.texture_amplitude < 0 || c.texture_frequency < 0) throw ValidationError("texture must be non-negative");
  }
}

namespace {

struct Ellipse {
  double cx, cy, major, minor, angle;
  double half_w() const {
    const double c = std::cos(angle), s = std::sin(angle);
    return std::sqrt(major * major * c * c + minor * minor * s * s);
  }
  double half_h() const {
    const double c = std::cos(angle), s = std::sin(angle);
    return std::sqrt(major * major * s * s + minor * minor * c * c);
  }
};

void paint(ImageD& img, const Ellipse& e, const SyntheticClass& cls, double phase) {
  constexpr double kSoftEdge = 0.15;
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  const auto r0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(e.cy - e.half_h())) - 1);
  const auto r1 = std::min<Eigen::Index>(img.rows() - 1, static_cast<Eigen::Index>(std::ceil(e.cy + e.half_h())) + 1);
  const auto c0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(e.cx - e.half_w())) - 1);
  const auto c1 = std::min<Eigen::Index>(img.cols() - 1, static_cast<Eigen::Index>(std::ceil(e.cx + e.half_w())) + 1);
  for (auto r = r0; r <= r1; ++r) {
    for (auto col = c0; col <= c1; ++col) {
      const double dx = (col + 0.5) - e.cx, dy = (r + 0.5) - e.cy;
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      const double rho = std::sqrt((u / e.major) * (u / e.major) + (v / e.minor) * (v / e.minor));
      if (rho >= 1.0) continue;
      const double w = std::min(1.0, (1.0 - rho) / kSoftEdge);
      const double texture =
          cls.texture_amplitude * std::sin(2.0 * std::numbers::pi * cls.texture_frequency * u + phase);
      const double core = rho < 0.5 ? std::min(1.0, (0.5 - rho) / kSoftEdge) * cls.core_offset : 0.0;
      img(r, col) += w * (cls.intensity_offset + texture) + core;
    }
  }
}

}  // namespace

SyntheticStudy generate_synthetic_study(const SyntheticSpec& spec, std::uint64_t seed,
                                        std::optional<int> forced_class) {
  validate(spec);
  if (forced_class && (*forced_class < 0 || *forced_class >= static_cast<int>(spec.classes.size()))) {
    throw ValidationError("forced class out of range");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ImageD img(spec.height, spec.width);
  const double px = 90.0 + 120.0 * unit(rng), py = 90.0 + 120.0 * unit(rng);
  const double phx = 2.0 * std::numbers::pi * unit(rng), phy = 2.0 * std::numbers::pi * unit(rng);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      img(r, c) = spec.background +
                  spec.ripple_amplitude * std::sin(2.0 * std::numbers::pi * c / px + phx) *
                      std::sin(2.0 * std::numbers::pi * r / py + phy);
    }
  }

  SyntheticStudy study;
  const int count = spec.lesions_min +
                    static_cast<int>(std::floor(unit(rng) * (spec.lesions_max - spec.lesions_min + 1) * (1 - 1e-12)));
  for (int n = 0; n < count; ++n) {
    const int cls_index = forced_class
                              ? *forced_class
                              : static_cast<int>(std::floor(unit(rng) * spec.classes.size() * (1 - 1e-12)));
    const auto& cls = spec.classes[static_cast<std::size_t>(cls_index)];
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      const double radius = cls.radius_min + (cls.radius_max - cls.radius_min) * unit(rng);
      Ellipse e{0, 0, radius * std::sqrt(cls.eccentricity), radius / std::sqrt(cls.eccentricity),
                std::numbers::pi * unit(rng)};
      const double mx = e.half_w() + spec.padding + 1.0;
      const double my = e.half_h() + spec.padding + 1.0;
      if (2 * mx >= spec.width || 2 * my >= spec.height) break;
      e.cx = mx + (spec.width - 2 * mx) * unit(rng);
      e.cy = my + (spec.height - 2 * my) * unit(rng);

      const BoundingBox box = BoundingBox::from_corners(
          std::floor(e.cx - e.half_w() - spec.padding), std::floor(e.cy - e.half_h() - spec.padding),
          std::ceil(e.cx + e.half_w() + spec.padding), std::ceil(e.cy + e.half_h() + spec.padding));
      const bool overlaps = std::any_of(study.lesions.begin(), study.lesions.end(), [&](const SyntheticLesion& l) {
        return iou(l.box, box) > spec.max_overlap_iou;
      });
      if (overlaps) continue;

      paint(img, e, cls, 2.0 * std::numbers::pi * unit(rng));
      const double c = std::cos(e.angle), s = std::sin(e.angle);
      DiameterPair d;
      d.long_axis = {{e.cx - e.major * c, e.cy - e.major * s}, {e.cx + e.major * c, e.cy + e.major * s}};
      d.short_axis = {{e.cx + e.minor * s, e.cy - e.minor * c}, {e.cx - e.minor * s, e.cy + e.minor * c}};
      study.lesions.push_back({box, cls_index, d});
      placed = true;
    }
    if (!placed) {
      throw ValidationError("could not place lesion " + std::to_string(n) + " within the overlap bound");
    }
  }

  if (spec.noise_sigma > 0) {
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] += spec.noise_sigma * gauss(rng);
  }
  study.raster = to_raster(img);
  return study;
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.classes = {
      {"bright", 14000, 0.0, 0.0, 0.0, 1.0, 24, 32},
      {"dark", -12000, 0.0, 0.0, 0.0, 1.25, 24, 32},
      {"ring", 22000, 0.0, 0.0, -34000, 1.0, 24, 32},
      {"target", -8000, 0.0, 0.0, 30000, 1.15, 24, 32},
      {"hot_core", 5000, 0.0, 0.0, 38000, 1.0, 24, 32},
  };
  return spec;
}

}  // namespace lesionkit
