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

#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lesionkit/dataset.hpp"
#include "lesionkit/errors.hpp"

using namespace lesionkit;

namespace {

std::vector<StudyKey> patients(int n, int studies_each = 1) {
  std::vector<StudyKey> keys;
  for (int p = 0; p < n; ++p) {
    for (int s = 0; s < studies_each; ++s) {
      keys.push_back({"p" + std::to_string(p), "s" + std::to_string(s), "i" + std::to_string(p) + "_" + std::to_string(s)});
    }
  }
  return keys;
}

std::set<std::string> patient_set(const SplitManifest& m) {
  std::set<std::string> out;
  for (const auto& k : m.members) out.insert(k.patient_id);
  return out;
}

}  // namespace

TEST_CASE("apportion uses largest remainders with earlier ties") {
  const std::array<double, 3> f{0.70, 0.15, 0.15};
  CHECK(apportion(10, f) == std::vector<std::size_t>{7, 2, 1});
  CHECK(apportion(3, f) == std::vector<std::size_t>{2, 1, 0});
  const std::array<double, 3> g{0.75, 0.10, 0.15};
  CHECK(apportion(100, g) == std::vector<std::size_t>{75, 10, 15});
  CHECK(apportion(20, g) == std::vector<std::size_t>{15, 2, 3});
  for (std::size_t n = 0; n < 200; ++n) {
    const auto a = apportion(n, f);
    CHECK(a[0] + a[1] + a[2] == n);
  }
}

TEST_CASE("patient split is disjoint, complete and deterministic") {
  const auto keys = patients(10, 3);
  const auto a = split_patients(std::span<const StudyKey>(keys), {}, 7);
  const auto b = split_patients(std::span<const StudyKey>(keys), {}, 7);
  CHECK(patient_set(a[0]).size() == 7);
  CHECK(patient_set(a[1]).size() == 2);
  CHECK(patient_set(a[2]).size() == 1);
  std::size_t total = 0;
  for (int i = 0; i < 3; ++i) {
    total += a[i].members.size();
    CHECK(a[i].members == b[i].members);
    for (int j = i + 1; j < 3; ++j) {
      std::vector<std::string> both;
      const auto pi = patient_set(a[i]), pj = patient_set(a[j]);
      std::set_intersection(pi.begin(), pi.end(), pj.begin(), pj.end(), std::back_inserter(both));
      CHECK(both.empty());
    }
  }
  CHECK(total == keys.size());
  CHECK(a[0].split_name == "train");
  CHECK(a[2].split_name == "test");

  const auto c = split_patients(std::span<const StudyKey>(keys), {}, 8);
  CHECK((c[0].members != a[0].members || c[1].members != a[1].members));
}

TEST_CASE("patient split errors") {
  std::vector<StudyKey> one;
  for (int i = 0; i < 100; ++i) one.push_back({"p", "s", std::to_string(i)});
  CHECK_THROWS_AS(split_patients(std::span<const StudyKey>(one), {}, 0), ValidationError);
  const auto keys = patients(10);
  CHECK_THROWS_AS(split_patients(std::span<const StudyKey>(keys), {0.5, 0.2, 0.2}, 0), ValidationError);
}

TEST_CASE("split manifest round-trips") {
  const auto keys = patients(6);
  const auto a = split_patients(std::span<const StudyKey>(keys), {}, 1);
  std::stringstream io;
  write_split_manifest(a, io);
  const auto back = read_split_manifest(io);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].split_name == a[i].split_name);
    CHECK(back[i].members == a[i].members);
  }
}

TEST_CASE("iteration split sizes") {
  auto s = split_for_iteration(100, 1);
  CHECK(s.train.size() == 75);
  CHECK(s.val.size() == 10);
  CHECK(s.test.size() == 15);
  s = split_for_iteration(20, 1);
  CHECK(s.train.size() == 15);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 3);
  const auto t = split_for_iteration(20, 1);
  CHECK(t.train == s.train);
  CHECK(t.test == s.test);
  std::vector<std::size_t> all(s.train);
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK_THROWS_AS(split_for_iteration(9, 1), ValidationError);
}

TEST_CASE("crop_patch identity and constants") {
  Raster slide(32, 32);
  for (Eigen::Index i = 0; i < slide.size(); ++i) slide.data()[i] = static_cast<std::uint16_t>(i * 37 % 65536);
  CHECK((crop_patch(slide, {0, 0, 32, 32}, 32) == slide).all());

  Raster flat = Raster::Constant(40, 50, 1234);
  const auto p = crop_patch(flat, {3.2, 7.9, 20.5, 11}, 16);
  CHECK(p.rows() == 16);
  CHECK((p == 1234).all());

  CHECK_THROWS_AS(crop_patch(flat, {45, 0, 10, 10}, 16), ValidationError);
  CHECK_THROWS_AS(crop_patch(flat, {-20, 0, 10, 10}, 16), ValidationError);
}

TEST_CASE("crop_patch bilinear checkerboard") {
  // Half-pixel centres at scale 1/2 sample the source at -0.25 (clamped
  // to 0), 0.25, 0.75 and 1.25 (clamped to 1), so the weights per axis are
  // 0, 1/4, 3/4 and 1.
  Raster slide = Raster::Zero(4, 4);
  slide(1, 2) = 1000;
  slide(2, 1) = 1000;
  const auto p = crop_patch(slide, {1, 1, 2, 2}, 4);
  const int expected[4][4] = {
      {0, 250, 750, 1000}, {250, 375, 625, 750}, {750, 625, 375, 250}, {1000, 750, 250, 0}};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(p(r, c) == expected[r][c]);
  }
}

TEST_CASE("resize_for_detection scales isotropically") {
  const std::vector<BoundingBox> box{{100, 100, 200, 100}};
  auto r = resize_for_detection(Raster::Constant(512, 1024, 7), box);
  CHECK(width_of(r.raster) == 512);
  CHECK(height_of(r.raster) == 256);
  CHECK(r.scale == 0.5);
  CHECK(r.boxes[0] == BoundingBox{50, 50, 100, 50});

  r = resize_for_detection(Raster::Constant(512, 512, 7), box);
  CHECK(r.scale == 1.0);
  CHECK(r.boxes[0] == box[0]);

  r = resize_for_detection(Raster::Constant(400, 300, 7), box);
  CHECK(width_of(r.raster) == 384);
  CHECK(height_of(r.raster) == 512);
  CHECK(r.scale == doctest::Approx(1.28));
  CHECK(r.boxes[0].left_x == doctest::Approx(128));
  CHECK(r.boxes[0].right() == doctest::Approx(384));
}

TEST_CASE("pgm round-trip") {
  Raster r(3, 5);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = static_cast<std::uint16_t>(i * 4099);
  std::stringstream io;
  write_pgm(r, io);
  CHECK(io.str().rfind("P5\n5 3\n65535\n", 0) == 0);
  CHECK((read_pgm(io) == r).all());
  std::stringstream bad("P2\n1 1\n255\n0\n");
  CHECK_THROWS_AS(read_pgm(bad), IoError);
}

TEST_CASE("synthetic studies") {
  auto spec = default_synthetic_spec();
  spec.lesions_min = spec.lesions_max = 0;
  auto s = generate_synthetic_study(spec, 1);
  CHECK(s.lesions.empty());
  CHECK(s.raster.rows() == spec.height);

  spec = default_synthetic_spec();
  spec.classes = {{"only", 8000, 0, 0, 0, 1.0, 14, 20}};
  spec.lesions_min = spec.lesions_max = 3;
  s = generate_synthetic_study(spec, 11);
  REQUIRE(s.lesions.size() == 3);
  const double background = s.raster.cast<double>().mean();
  for (const auto& l : s.lesions) {
    const BoundingBox core{l.box.left_x + spec.padding, l.box.top_y + spec.padding, l.box.width - 2 * spec.padding,
                           l.box.height - 2 * spec.padding};
    const auto block = s.raster.block(static_cast<Eigen::Index>(core.top_y), static_cast<Eigen::Index>(core.left_x),
                                      static_cast<Eigen::Index>(core.height), static_cast<Eigen::Index>(core.width));
    CHECK(block.cast<double>().mean() - background >= spec.contrast);
    CHECK(l.box.left_x >= 0);
    CHECK(l.box.right() <= spec.width);
    CHECK(l.true_class == 0);
  }
  const auto again = generate_synthetic_study(spec, 11);
  CHECK((again.raster == s.raster).all());

  spec.lesions_min = spec.lesions_max = 40;
  spec.classes[0].radius_min = spec.classes[0].radius_max = 60;
  spec.max_retries = 20;
  CHECK_THROWS_AS(generate_synthetic_study(spec, 1), ValidationError);
}

TEST_CASE("synthetic spec validation") {
  auto spec = default_synthetic_spec();
  spec.classes[0].intensity_offset = 100;
  CHECK_THROWS_AS(validate(spec), ValidationError);
  spec = default_synthetic_spec();
  spec.lesions_max = 0;
  spec.lesions_min = 1;
  CHECK_THROWS_AS(validate(spec), ValidationError);
}
