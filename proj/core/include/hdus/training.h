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

#ifndef HDUS_TRAINING_H_
#define HDUS_TRAINING_H_

#include <cstddef>
#include <functional>
#include <span>

#include "hdus/matrix.h"
#include "hdus/mlp.h"
#include "hdus/rng.h"

namespace hdus {

struct SgdConfig {
  int epochs = 1;
  double lr = 0.05;
  std::size_t batch_size = 32;
};

// Shuffles [0, n) with `rng` and calls `fn` once per consecutive minibatch of
// row indices. The last batch may be short.
void for_each_minibatch(std::size_t n, std::size_t batch_size, Rng& rng,
                        const std::function<void(std::span<const std::size_t>)>& fn);

// Minibatch SGD on cross-entropy. Returns the mean batch loss of the final
// epoch. Throws kDivergence (with the epoch index) on a non-finite loss.
double train_supervised(MlpModel& model, const Matrix& features,
                        std::span<const int> labels, const SgdConfig& cfg,
                        Rng& rng);

}  // namespace hdus

#endif  // HDUS_TRAINING_H_
