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
#include <random>
#include <sstream>

#include "doctest.h"
#include "lesionkit/bookmark.hpp"
#include "lesionkit/errors.hpp"

using namespace lesionkit;

namespace {

DiameterPair pair_of(double ax, double ay, double bx, double by, double cx, double cy, double dx, double dy) {
  return {{{ax, ay}, {bx, by}}, {{cx, cy}, {dx, dy}}};
}

}  // namespace

TEST_CASE("bbox from diameters, worked examples") {
  auto b = bbox_from_diameters(pair_of(100, 120, 140, 160, 110, 150, 130, 130), 512, 512);
  CHECK(b.box == BoundingBox{80, 100, 80, 80});
  CHECK_FALSE(b.clipped);

  b = bbox_from_diameters(pair_of(50, 50, 50, 50, 50, 50, 50, 50), 512, 512);
  CHECK(b.box == BoundingBox{30, 30, 40, 40});

  b = bbox_from_diameters(pair_of(5, 5, 30, 30, 10, 25, 25, 10), 512, 512);
  CHECK(b.box == BoundingBox{0, 0, 50, 50});
  CHECK(b.clipped);
}

TEST_CASE("bbox from diameters rejects boxes outside the image") {
  CHECK_THROWS_AS(bbox_from_diameters(pair_of(600, 600, 610, 610, 600, 610, 610, 600), 512, 512), ValidationError);
  CHECK_THROWS_AS(bbox_from_diameters(pair_of(10, 10, 20, 20, 10, 20, 20, 10), 0, 512), ValidationError);
}

TEST_CASE("bbox always lies inside the image and contains every endpoint it can") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 520);
  for (int i = 0; i < 500; ++i) {
    const auto d = pair_of(u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng));
    MinedBox b;
    try {
      b = bbox_from_diameters(d, 512, 480);
    } catch (const ValidationError&) {
      continue;
    }
    REQUIRE(b.box.valid());
    CHECK(b.box.left_x >= 0);
    CHECK(b.box.top_y >= 0);
    CHECK(b.box.right() <= 512);
    CHECK(b.box.bottom() <= 480);
    for (const auto& p : d.endpoints()) {
      if (p.x < 512 && p.y < 480) {
        CHECK(p.x >= b.box.left_x);
        CHECK(p.y >= b.box.top_y);
      }
    }
  }
}

TEST_CASE("bookmark parsing collects rejections") {
  std::istringstream in(
      R"({"patient_id":"p1","study_id":"s1","image_id":"i1","image_w":512,"image_h":512,"d1":[1,2,3,4],"d2":[5,6,7,8]})"
      "\n\n"
      R"({"patient_id":"p2","study_id":"s1","image_id":"i2","image_w":512,"image_h":512,"d1":[1,2,3,4],"d2":[5,6,7]})"
      "\n"
      "not json\n"
      R"({"patient_id":"p3","study_id":"s1","image_id":"i3","image_w":0,"image_h":512,"d1":[1,2,3,4],"d2":[5,6,7,8]})"
      "\n"
      R"({"patient_id":"p4","study_id":"s1","image_id":"i4","image_w":9,"image_h":9,"d1":[-1,2,3,4],"d2":[5,6,7,8]})"
      "\n");
  const auto r = parse_bookmarks(in);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].diameters == pair_of(1, 2, 3, 4, 5, 6, 7, 8));
  CHECK(r.records[0].key.patient_id == "p1");
  REQUIRE(r.rejections.size() == 4);
  CHECK(r.rejections[0].line_number == 3);
  CHECK(r.rejections[1].line_number == 4);
  CHECK(r.rejections[2].line_number == 5);
  CHECK(r.rejections[3].line_number == 6);
}

TEST_CASE("empty bookmark stream") {
  std::istringstream in("");
  const auto r = parse_bookmarks(in);
  CHECK(r.records.empty());
  CHECK(r.rejections.empty());
}

TEST_CASE("bookmark serialization round-trips") {
  BookmarkRecord rec{{"p", "s", "i"}, 640, 480, pair_of(1.5, 2, 3, 4.25, 5, 6, 7, 8)};
  CHECK(parse_bookmark_line(serialize_bookmark(rec)) == rec);
}

TEST_CASE("box manifest round-trips") {
  std::vector<ManifestRow> rows{{{"p1", "s1", "a"}, {{80, 100, 80, 80}, false}},
                                {{"p2", "s1", "b"}, {{0, 0, 50, 50}, true}}};
  std::stringstream io;
  write_box_manifest(rows, io);
  CHECK(io.str().rfind("patient_id,study_id,image_id,left_x,top_y,width,height,clipped\n", 0) == 0);
  const auto back = read_box_manifest(io);
  REQUIRE(back.size() == 2);
  CHECK(back[1].key.image_id == "b");
  CHECK(back[1].box.box == BoundingBox{0, 0, 50, 50});
  CHECK(back[1].box.clipped);
}
