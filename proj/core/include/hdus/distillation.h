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

#ifndef HDUS_DISTILLATION_H_
#define HDUS_DISTILLATION_H_

#include <cstddef>
#include <vector>

#include "hdus/matrix.h"
#include "hdus/mlp.h"
#include "hdus/rng.h"

namespace hdus {

struct DistillConfig {
  double temperature = 3.0;
  int epochs = 5;
  double lr = 0.05;
  std::size_t batch_size = 32;

  void validate() const;
};

// Unlabeled features shared for distillation. row_ids record where each row
// came from in the source dataset, for disjointness audits.
struct ReferenceSet {
  Matrix features;
  std::vector<std::size_t> row_ids;

  std::size_t size() const { return features.rows(); }
};

// Trains a freshly initialized seed model (drawn from `rng`) to match the
// temperature-softened outputs of `main` on the reference features. Only the
// reference features are read; the teacher is never modified.
//
// The seed may not have more parameters than the main model.
MlpModel incubate_seed(const MlpModel& main, const MlpSpec& seed_spec,
                       const ReferenceSet& ref, const DistillConfig& cfg,
                       Rng& rng);

// Continues distillation from an existing student.
MlpModel distill_student(MlpModel student, const MlpModel& teacher,
                         const ReferenceSet& ref, const DistillConfig& cfg,
                         Rng& rng);

struct Fidelity {
  double mean_kl = 0.0;    // mean KL(softmax_T(main) || softmax_T(seed))
  double agreement = 0.0;  // fraction of rows with equal argmax
};

Fidelity distill_fidelity(const MlpModel& seed, const MlpModel& main,
                          const ReferenceSet& ref, double temperature);

}  // namespace hdus

#endif  // HDUS_DISTILLATION_H_
