/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "fixedhead/data.hpp"
#include "fixedhead/errors.hpp"

namespace fixedhead::data {

namespace {

std::vector<std::uint8_t> inflate_gzip(const std::vector<std::uint8_t>& in, const std::string& name) {
  z_stream zs{};
  // 15 window bits + 32: accept gzip or zlib headers.
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw IoError("zlib init failed for " + name);
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 16);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw LengthError(name + ": corrupt or truncated gzip stream");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw LengthError(name + ": truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::size_t> dims;
  std::size_t payload_offset = 0;
};

IdxHeader parse_header(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 4) throw LengthError(name + ": file too short for an IDX header");
  IdxHeader h;
  h.magic = read_be32(bytes, 0);
  if ((h.magic >> 16) != 0 || ((h.magic >> 8) & 0xff) != 0x08) {
    throw FormatError(name + ": not an unsigned-byte IDX file (magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", h.magic);
      return std::string(buf);
    }() + ")");
  }
  const std::size_t ndims = h.magic & 0xff;
  if (bytes.size() < 4 + 4 * ndims) throw LengthError(name + ": truncated IDX header");
  for (std::size_t i = 0; i < ndims; ++i) h.dims.push_back(read_be32(bytes, 4 + 4 * i));
  h.payload_offset = 4 + 4 * ndims;
  return h;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot write " + path.string());
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (n != static_cast<int>(bytes.size())) throw IoError("short write to " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return inflate_gzip(bytes, path.string());
  return bytes;
}

Dataset read_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes, Split split) {
  const auto img = read_file_bytes(images_path);
  const auto lab = read_file_bytes(labels_path);
  const std::string iname = images_path.string(), lname = labels_path.string();

  const IdxHeader ih = parse_header(img, iname);
  Dataset ds;
  ds.split = split;
  ds.num_classes = num_classes;
  if (ih.magic == kIdxImagesMagic) {
    ds.channels = 1;
    ds.height = ih.dims[1];
    ds.width = ih.dims[2];
  } else if (ih.magic == kIdxImages4dMagic) {
    ds.channels = ih.dims[1];
    ds.height = ih.dims[2];
    ds.width = ih.dims[3];
  } else {
    throw FormatError(iname + ": expected image magic 0x00000803 or 0x00000804");
  }
  const std::size_t n = ih.dims[0];
  const std::size_t want = n * ds.channels * ds.height * ds.width;
  if (img.size() - ih.payload_offset < want) {
    throw LengthError(iname + ": payload has " + std::to_string(img.size() - ih.payload_offset) + " bytes, header promises " +
                      std::to_string(want));
  }
  ds.images.assign(img.begin() + static_cast<std::ptrdiff_t>(ih.payload_offset),
                   img.begin() + static_cast<std::ptrdiff_t>(ih.payload_offset + want));

  const IdxHeader lh = parse_header(lab, lname);
  if (lh.magic != kIdxLabelsMagic) throw FormatError(lname + ": expected label magic 0x00000801");
  if (lh.dims[0] != n) {
    throw FormatError(lname + ": " + std::to_string(lh.dims[0]) + " labels for " + std::to_string(n) + " images");
  }
  if (lab.size() - lh.payload_offset < n) throw LengthError(lname + ": truncated label payload");
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(lab[lh.payload_offset + i]);
  ds.validate();
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  ds.validate();
  std::vector<std::uint8_t> img;
  if (ds.channels == 1) {
    put_be32(img, kIdxImagesMagic);
  } else {
    put_be32(img, kIdxImages4dMagic);
  }
  put_be32(img, static_cast<std::uint32_t>(ds.size()));
  if (ds.channels != 1) put_be32(img, static_cast<std::uint32_t>(ds.channels));
  put_be32(img, static_cast<std::uint32_t>(ds.height));
  put_be32(img, static_cast<std::uint32_t>(ds.width));
  img.insert(img.end(), ds.images.begin(), ds.images.end());

  std::vector<std::uint8_t> lab;
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (int y : ds.labels) {
    if (y > 255) throw FormatError("IDX labels are single bytes; label " + std::to_string(y) + " does not fit");
    lab.push_back(static_cast<std::uint8_t>(y));
  }
  write_bytes(images_path, img);
  write_bytes(labels_path, lab);
}

}  // namespace fixedhead::data
