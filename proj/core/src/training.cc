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

#include "hdus/training.h"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hdus/error.h"
#include "hdus/losses.h"

namespace hdus {

void for_each_minibatch(
    std::size_t n, std::size_t batch_size, Rng& rng,
    const std::function<void(std::span<const std::size_t>)>& fn) {
  if (batch_size == 0) fail(ErrorCode::kDomain, "batch size must be >= 1");
  const std::vector<std::size_t> order = rng.permutation(n);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t len = std::min(batch_size, n - start);
    fn(std::span<const std::size_t>(order).subspan(start, len));
  }
}

double train_supervised(MlpModel& model, const Matrix& features,
                        std::span<const int> labels, const SgdConfig& cfg,
                        Rng& rng) {
  if (features.rows() != labels.size()) {
    fail(ErrorCode::kDimension, "feature rows and label count differ");
  }
  const std::size_t classes = model.spec().output_dim();
  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    std::size_t batches = 0;
    try {
      for_each_minibatch(features.rows(), cfg.batch_size, rng,
                         [&](std::span<const std::size_t> idx) {
                           Matrix x = select_rows(features, idx);
                           std::vector<int> y(idx.size());
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             y[i] = labels[idx[i]];
                           }
                           Matrix targets = one_hot(y, classes);
                           auto step = mlp_backward(model, x,
                                                    CrossEntropyLoss{targets});
                           if (!std::isfinite(step.loss)) {
                             fail(ErrorCode::kDivergence,
                                  "non-finite loss");
                           }
                           sgd_step(model, step.grads, cfg.lr);
                           total += step.loss;
                           ++batches;
                         });
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDivergence) throw;
      fail(ErrorCode::kDivergence, e.detail() + " (epoch " + std::to_string(epoch) + ")");
    }
    last_epoch_loss = batches ? total / static_cast<double>(batches) : 0.0;
  }
  return last_epoch_loss;
}

}  // namespace hdus
