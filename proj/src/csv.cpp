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

#include "lesionkit/csv.hpp"

#include <charconv>
#include <fmt/format.h>

#include "lesionkit/errors.hpp"

namespace lesionkit::csv {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::vector<std::vector<std::string>> read_table(std::istream& in, std::string_view expected_header) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV, expected header: " + std::string(expected_header));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw IoError("unexpected CSV header '" + line + "', expected '" + std::string(expected_header) + "'");
  }
  const auto width = split(expected_header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != width) {
      throw IoError("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(width) + ": " + line);
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string number(double v) { return fmt::format("{}", v); }

double to_double(const std::string& field) {
  double v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw IoError("not a number: '" + field + "'");
  return v;
}

long long to_int(const std::string& field) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw IoError("not an integer: '" + field + "'");
  return v;
}

const std::string& checked_field(const std::string& field) {
  if (field.find_first_of(",\n\r") != std::string::npos) {
    throw ValidationError("field contains a CSV separator: '" + field + "'");
  }
  return field;
}

}  // namespace lesionkit::csv
