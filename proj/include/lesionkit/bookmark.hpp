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
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lesionkit/box.hpp"

namespace lesionkit {

struct Point2 {
  double x{0};
  double y{0};
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Segment {
  Point2 a;
  Point2 b;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Long axis and its perpendicular short axis, in image pixels. No
/// orthogonality is enforced.
struct DiameterPair {
  Segment long_axis;
  Segment short_axis;

  std::array<Point2, 4> endpoints() const {
    return {long_axis.a, long_axis.b, short_axis.a, short_axis.b};
  }
  bool valid() const;
  friend bool operator==(const DiameterPair&, const DiameterPair&) = default;
};

struct StudyKey {
  std::string patient_id;
  std::string study_id;
  std::string image_id;
  friend bool operator==(const StudyKey&, const StudyKey&) = default;
  friend auto operator<=>(const StudyKey&, const StudyKey&) = default;
};

struct BookmarkRecord {
  StudyKey key;
  int image_width{0};
  int image_height{0};
  DiameterPair diameters;
  friend bool operator==(const BookmarkRecord&, const BookmarkRecord&) = default;
};

struct Rejection {
  std::size_t line_number{0};  // 1-based
  std::string reason;
};

struct ParseResult {
  std::vector<BookmarkRecord> records;
  std::vector<Rejection> rejections;
};

/// Parse line-delimited JSON bookmark records. Malformed or invalid lines
/// are reported in `rejections` rather than aborting the parse. Blank lines
/// are skipped. Throws IoError if the stream goes bad mid-read.
ParseResult parse_bookmarks(std::istream& in);

/// Validate a single JSON line; throws ValidationError with the reason.
BookmarkRecord parse_bookmark_line(const std::string& line);

std::string serialize_bookmark(const BookmarkRecord& record);
void serialize_bookmarks(const std::vector<BookmarkRecord>& records, std::ostream& out);

/// Padded box plus whether clipping to the image moved any edge.
struct MinedBox {
  BoundingBox box;
  bool clipped{false};
};

inline constexpr double kDefaultPadding = 20.0;

/// Box enclosing both diameters with `padding` pixels on every side,
/// clipped to the image. Throws
/// ValidationError if the padded box lies entirely outside the image or
/// the diameters are invalid.
MinedBox bbox_from_diameters(const DiameterPair& d, int image_width, int image_height,
                             double padding = kDefaultPadding);

struct ManifestRow {
  StudyKey key;
  MinedBox box;
};

/// Output manifest CSV: patient_id,study_id,image_id,left_x,top_y,width,height,clipped
void write_box_manifest(const std::vector<ManifestRow>& rows, std::ostream& out);
std::vector<ManifestRow> read_box_manifest(std::istream& in);

}  // namespace lesionkit
