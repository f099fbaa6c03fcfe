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

#ifndef HDUS_RNG_H_
#define HDUS_RNG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hdus {

// Purposes for derived streams. A client's training and incubation draw from
// separate streams so that enabling seed exchange never perturbs main-model
// training.
enum class StreamPurpose : std::uint64_t {
  kData = 1,
  kPartition = 2,
  kInit = 3,
  kTrain = 4,
  kIncubate = 5,
  kReference = 6,
  kServer = 7,
};

// xoshiro256** with splitmix64 seeding. All distributions are implemented
// here rather than taken from <random> so streams are reproducible across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Counter-based split: the stream depends only on (master, purpose, id), so
  // adding clients never shifts the streams of existing ones.
  static Rng derive(std::uint64_t master, StreamPurpose purpose,
                    std::uint64_t id = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  std::vector<std::size_t> permutation(std::size_t n);

  bool operator==(const Rng& other) const = default;

 private:
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace hdus

#endif  // HDUS_RNG_H_
