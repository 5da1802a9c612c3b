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

#include "lesionkit/bookmark.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

#include "lesionkit/csv.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

using nlohmann::json;

bool valid_coord(double v) { return std::isfinite(v) && v >= 0.0; }

Segment segment_from(const json& j, const char* name) {
  if (!j.contains(name)) throw ValidationError(std::string("missing field ") + name);
  const auto& arr = j.at(name);
  if (!arr.is_array() || arr.size() != 4) {
    throw ValidationError(std::string(name) + " must hold exactly 4 coordinates");
  }
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!arr[i].is_number()) throw ValidationError(std::string(name) + " has a non-numeric coordinate");
    c[i] = arr[i].get<double>();
    if (!valid_coord(c[i])) throw ValidationError(std::string(name) + " has a negative or non-finite coordinate");
  }
  return Segment{{c[0], c[1]}, {c[2], c[3]}};
}

std::string id_from(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_string()) throw ValidationError(std::string("missing string field ") + name);
  auto s = j.at(name).get<std::string>();
  if (s.empty()) throw ValidationError(std::string(name) + " is empty");
  return s;
}

int size_from(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_number_integer()) {
    throw ValidationError(std::string("missing integer field ") + name);
  }
  const auto v = j.at(name).get<long long>();
  if (v < 1 || v > std::numeric_limits<int>::max()) throw ValidationError(std::string(name) + " must be >= 1");
  return static_cast<int>(v);
}

}  // namespace

bool DiameterPair::valid() const {
  for (const auto& p : endpoints()) {
    if (!valid_coord(p.x) || !valid_coord(p.y)) return false;
  }
  return true;
}

BookmarkRecord parse_bookmark_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  BookmarkRecord r;
  r.key.patient_id = id_from(j, "patient_id");
  r.key.study_id = id_from(j, "study_id");
  r.key.image_id = id_from(j, "image_id");
  r.image_width = size_from(j, "image_w");
  r.image_height = size_from(j, "image_h");
  r.diameters.long_axis = segment_from(j, "d1");
  r.diameters.short_axis = segment_from(j, "d2");
  return r;
}

ParseResult parse_bookmarks(std::istream& in) {
  if (!in) throw IoError("bookmark stream is not readable");
  ParseResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.records.push_back(parse_bookmark_line(line));
    } catch (const ValidationError& e) {
      result.rejections.push_back({line_number, e.what()});
    }
  }
  if (in.bad()) throw IoError("read error after line " + std::to_string(line_number));
  return result;
}

std::string serialize_bookmark(const BookmarkRecord& r) {
  const auto& d = r.diameters;
  json j = {
      {"patient_id", r.key.patient_id},
      {"study_id", r.key.study_id},
      {"image_id", r.key.image_id},
      {"image_w", r.image_width},
      {"image_h", r.image_height},
      {"d1", {d.long_axis.a.x, d.long_axis.a.y, d.long_axis.b.x, d.long_axis.b.y}},
      {"d2", {d.short_axis.a.x, d.short_axis.a.y, d.short_axis.b.x, d.short_axis.b.y}},
  };
  return j.dump();
}

void serialize_bookmarks(const std::vector<BookmarkRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << serialize_bookmark(r) << '\n';
}

MinedBox bbox_from_diameters(const DiameterPair& d, int image_width, int image_height, double padding) {
  if (!d.valid()) throw ValidationError("diameter coordinates must be finite and non-negative");
  if (image_width < 1 || image_height < 1) throw ValidationError("image size must be positive");
  if (!(padding >= 1.0)) throw ValidationError("padding must be >= 1 pixel");

  double x_min = std::numeric_limits<double>::infinity();
  double y_min = x_min;
  double x_max = -x_min;
  double y_max = -x_min;
  for (const auto& p : d.endpoints()) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }

  const double x0 = x_min - padding;
  const double y0 = y_min - padding;
  const double x1 = x_max + padding;
  const double y1 = y_max + padding;

  const double cx0 = std::max(x0, 0.0);
  const double cy0 = std::max(y0, 0.0);
  const double cx1 = std::min(x1, static_cast<double>(image_width));
  const double cy1 = std::min(y1, static_cast<double>(image_height));
  if (cx1 <= cx0 || cy1 <= cy0) throw ValidationError("padded box lies entirely outside the image");

  MinedBox out;
  out.box = BoundingBox::from_corners(cx0, cy0, cx1, cy1);
  out.clipped = cx0 != x0 || cy0 != y0 || cx1 != x1 || cy1 != y1;
  return out;
}

namespace {
constexpr const char* kManifestHeader = "patient_id,study_id,image_id,left_x,top_y,width,height,clipped";
}

void write_box_manifest(const std::vector<ManifestRow>& rows, std::ostream& out) {
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << csv::checked_field(r.key.patient_id) << ',' << csv::checked_field(r.key.study_id) << ','
        << csv::checked_field(r.key.image_id) << ',' << csv::number(r.box.box.left_x) << ','
        << csv::number(r.box.box.top_y) << ',' << csv::number(r.box.box.width) << ','
        << csv::number(r.box.box.height) << ',' << (r.box.clipped ? 1 : 0) << '\n';
  }
}

std::vector<ManifestRow> read_box_manifest(std::istream& in) {
  std::vector<ManifestRow> rows;
  for (const auto& f : csv::read_table(in, kManifestHeader)) {
    ManifestRow r;
    r.key = {f[0], f[1], f[2]};
    r.box.box = {csv::to_double(f[3]), csv::to_double(f[4]), csv::to_double(f[5]), csv::to_double(f[6])};
    r.box.clipped = csv::to_int(f[7]) != 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lesionkit
