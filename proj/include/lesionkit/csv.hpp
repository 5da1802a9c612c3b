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

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace lesionkit::csv {

/// Split one CSV line on commas. Fields are plain (no quoting); ids with
/// commas are rejected by the writers.
std::vector<std::string> split(std::string_view line);

/// Read all non-empty lines after the header. Throws IoError if the header
/// does not match `expected_header`.
std::vector<std::vector<std::string>> read_table(std::istream& in, std::string_view expected_header);

/// Shortest round-trip decimal representation.
std::string number(double v);

double to_double(const std::string& field);
long long to_int(const std::string& field);

/// Throws ValidationError if the field would break CSV framing.
const std::string& checked_field(const std::string& field);

}  // namespace lesionkit::csv
