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

#include "hdus/distillation.h"

#include <cmath>
#include <string>

#include "hdus/error.h"
#include "hdus/losses.h"
#include "hdus/training.h"

namespace hdus {

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) {
    fail(ErrorCode::kConfig, "distillation temperature must be > 0");
  }
  if (epochs < 1) fail(ErrorCode::kConfig, "distillation epochs must be >= 1");
  if (!(lr >= 0.0)) fail(ErrorCode::kConfig, "distillation lr must be >= 0");
  if (batch_size < 1) fail(ErrorCode::kConfig, "distillation batch size must be >= 1");
}

MlpModel incubate_seed(const MlpModel& main, const MlpSpec& seed_spec,
                       const ReferenceSet& ref, const DistillConfig& cfg,
                       Rng& rng) {
  seed_spec.validate();
  if (seed_spec.input_dim() != main.spec().input_dim() ||
      seed_spec.output_dim() != main.spec().output_dim()) {
    fail(ErrorCode::kConfig, "seed spec " + seed_spec.to_string() +
                                 " does not match main spec " +
                                 main.spec().to_string() + " in (F, C)");
  }
  if (parameter_count(seed_spec) > main.parameter_count()) {
    fail(ErrorCode::kConfig, "seed spec " + seed_spec.to_string() +
                                 " is larger than main spec " +
                                 main.spec().to_string());
  }
  return distill_student(init_mlp(seed_spec, rng), main, ref, cfg, rng);
}

MlpModel distill_student(MlpModel student, const MlpModel& teacher,
                         const ReferenceSet& ref, const DistillConfig& cfg,
                         Rng& rng) {
  cfg.validate();
  if (ref.size() == 0) fail(ErrorCode::kDomain, "reference set is empty");
  // The teacher is frozen, so its softened targets are identical for every
  // epoch pass and are computed once.
  const Matrix teacher_soft =
      softmax_rows(mlp_forward(teacher, ref.features), cfg.temperature);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      for_each_minibatch(
          ref.size(), cfg.batch_size, rng, [&](std::span<const std::size_t> idx) {
            const Matrix x = select_rows(ref.features, idx);
            const Matrix targets = select_rows(teacher_soft, idx);
            auto step = mlp_backward(student, x,
                                     DistillLoss{targets, cfg.temperature});
            if (!std::isfinite(step.loss)) {
              fail(ErrorCode::kDivergence,
                   "non-finite distillation loss");
            }
            sgd_step(student, step.grads, cfg.lr);
          });
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDivergence) throw;
      fail(ErrorCode::kDivergence, e.detail() + " (epoch " + std::to_string(epoch) + ")");
    }
  }
  return student;
}

Fidelity distill_fidelity(const MlpModel& seed, const MlpModel& main,
                          const ReferenceSet& ref, double temperature) {
  if (ref.size() == 0) fail(ErrorCode::kDomain, "reference set is empty");
  const Matrix main_logits = mlp_forward(main, ref.features);
  const Matrix seed_logits = mlp_forward(seed, ref.features);
  const Matrix p = softmax_rows(main_logits, temperature);
  const Matrix q = softmax_rows(seed_logits, temperature);
  Fidelity out;
  std::size_t agree = 0;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    out.mean_kl += kl_divergence(p.row(r), q.row(r));
    if (argmax(main_logits.row(r)) == argmax(seed_logits.row(r))) ++agree;
  }
  out.mean_kl /= static_cast<double>(ref.size());
  out.agreement = static_cast<double>(agree) / static_cast<double>(ref.size());
  return out;
}

}  // namespace hdus
