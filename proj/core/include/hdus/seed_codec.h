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

#ifndef HDUS_SEED_CODEC_H_
#define HDUS_SEED_CODEC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hdus/mlp.h"

namespace hdus {

// Seed blob layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "HDUS"
//   4       2     format version (u16, currently 1)
//   6       1     activation (0 = relu)
//   7       1     reserved, must be 0
//   8       4     dim count D (u32, >= 2)
//   12      4*D   layer dims (u32 each)
//   ...     8*P   parameters as IEEE-754 f64, MlpModel::flatten order
//   end-4   4     CRC-32 (zlib polynomial) of every preceding byte
inline constexpr std::uint16_t kSeedFormatVersion = 1;

std::vector<std::uint8_t> encode_seed(const MlpModel& model);

// Throws kParse with the byte offset of the first inconsistency.
MlpModel decode_seed(std::span<const std::uint8_t> blob);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace hdus

#endif  // HDUS_SEED_CODEC_H_
