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

#include "lesionkit/raster.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

long read_header_int(std::istream& in) {
  // Skip whitespace and '#' comments between header tokens.
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  long v = -1;
  if (!(in >> v)) throw IoError("malformed PGM header");
  return v;
}

}  // namespace

void write_pgm(const Raster& raster, std::ostream& out) {
  out << "P5\n" << raster.cols() << ' ' << raster.rows() << "\n65535\n";
  std::string bytes(static_cast<std::size_t>(raster.size()) * 2, '\0');
  for (Eigen::Index i = 0; i < raster.size(); ++i) {
    const std::uint16_t v = raster.data()[i];
    bytes[2 * i] = static_cast<char>(v >> 8);
    bytes[2 * i + 1] = static_cast<char>(v & 0xff);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing PGM data");
}

Raster read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw IoError("not a binary PGM (P5) stream");
  const long width = read_header_int(in);
  const long height = read_header_int(in);
  const long maxval = read_header_int(in);
  if (width < 1 || height < 1) throw IoError("PGM has non-positive dimensions");
  if (maxval < 256 || maxval > 65535) throw IoError("only 16-bit PGM is supported");
  in.get();  // single whitespace before the raster
  std::string bytes(static_cast<std::size_t>(width * height * 2), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError("truncated PGM data");
  Raster r(height, width);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const auto hi = static_cast<unsigned char>(bytes[2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[2 * i + 1]);
    r.data()[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return r;
}

void write_pgm(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_pgm(raster, out);
}

Raster read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open raster: " + path.string());
  return read_pgm(in);
}

}  // namespace lesionkit
