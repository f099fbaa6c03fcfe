// Copyright 2026 The HDUS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hdus/seed_codec.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <string>

#include "hdus/error.h"

namespace hdus {

namespace {

constexpr std::uint8_t kMagic[4] = {'H', 'D', 'U', 'S'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at,
                     int bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < bytes; ++i) {
    value |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  }
  return value;
}

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
  fail(ErrorCode::kParse,
       "seed blob at byte " + std::to_string(offset) + ": " + what);
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; seed blobs are far below 4 GiB.
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_seed(const MlpModel& model) {
  const auto& dims = model.spec().layer_dims;
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * dims.size() + 8 * model.parameter_count());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le(out, kSeedFormatVersion, 2);
  out.push_back(static_cast<std::uint8_t>(model.spec().activation));
  out.push_back(0);
  put_le(out, dims.size(), 4);
  for (std::size_t d : dims) put_le(out, d, 4);
  for (double v : model.flatten()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  put_le(out, crc32_of(out), 4);
  return out;
}

MlpModel decode_seed(std::span<const std::uint8_t> blob) {
  if (blob.size() < 16) parse_fail(blob.size(), "truncated header");
  if (std::memcmp(blob.data(), kMagic, 4) != 0) parse_fail(0, "bad magic");
  const std::size_t body = blob.size() - 4;
  const auto stored_crc = static_cast<std::uint32_t>(get_le(blob, body, 4));
  if (crc32_of(blob.first(body)) != stored_crc) parse_fail(body, "CRC mismatch");

  const auto version = get_le(blob, 4, 2);
  if (version != kSeedFormatVersion) {
    parse_fail(4, "unsupported format version " + std::to_string(version));
  }
  if (blob[6] != static_cast<std::uint8_t>(Activation::kRelu)) {
    parse_fail(6, "unknown activation");
  }
  if (blob[7] != 0) parse_fail(7, "reserved byte is not zero");
  const auto dim_count = get_le(blob, 8, 4);
  if (dim_count < 2) parse_fail(8, "fewer than two layer dims");
  std::size_t at = 12;
  if (dim_count > (body - at) / 4) parse_fail(8, "dim count exceeds blob");

  MlpSpec spec;
  for (std::uint64_t i = 0; i < dim_count; ++i, at += 4) {
    const auto d = get_le(blob, at, 4);
    if (d == 0) parse_fail(at, "zero layer dim");
    spec.layer_dims.push_back(static_cast<std::size_t>(d));
  }
  const std::size_t params = parameter_count(spec);
  if (body - at != 8 * params) {
    parse_fail(at, "expected " + std::to_string(params) +
                       " parameters, payload holds " +
                       std::to_string((body - at) / 8));
  }
  std::vector<double> flat(params);
  for (std::size_t i = 0; i < params; ++i, at += 8) {
    flat[i] = std::bit_cast<double>(get_le(blob, at, 8));
  }
  MlpModel model(std::move(spec));
  model.assign(flat);
  return model;
}

}  // namespace hdus
