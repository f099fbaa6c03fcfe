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

#ifndef HDUS_MLP_H_
#define HDUS_MLP_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hdus/matrix.h"
#include "hdus/rng.h"

namespace hdus {

enum class Activation : std::uint8_t { kRelu = 0 };

struct MlpSpec {
  // Input feature dim first, class count last.
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::kRelu;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return layer_dims.size() - 1; }

  // Throws kValidation unless there are >= 2 dims, all >= 1.
  void validate() const;
  std::string to_string() const;

  bool operator==(const MlpSpec&) const = default;
};

std::size_t parameter_count(const MlpSpec& spec);

// Size tiers standing in for small/medium/large convolutional models:
// small [F,16,C], medium [F,64,C], large [F,128,64,C].
enum class ModelTier { kSmall, kMedium, kLarge };

MlpSpec tier_spec(ModelTier tier, std::size_t features, std::size_t classes);
std::string_view tier_name(ModelTier tier);
ModelTier parse_tier(std::string_view name);

// weight is [fan_in x fan_out]; forward computes x * weight + bias.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

class MlpModel {
 public:
  MlpModel() = default;
  // All parameters zero.
  explicit MlpModel(MlpSpec spec);

  const MlpSpec& spec() const noexcept { return spec_; }
  std::span<DenseLayer> layers() noexcept { return layers_; }
  std::span<const DenseLayer> layers() const noexcept { return layers_; }
  std::size_t parameter_count() const { return hdus::parameter_count(spec_); }

  // Parameters in canonical order: per layer, weight row-major then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const MlpModel&) const = default;

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

// Same layout as the model parameters.
struct Gradients {
  std::vector<DenseLayer> layers;

  std::vector<double> flatten() const;
  double max_abs() const;
};

// He-uniform weights in +-sqrt(6/fan_in), zero biases.
MlpModel init_mlp(const MlpSpec& spec, Rng& rng);

// Raw (pre-softmax) logits, [B x C].
Matrix mlp_forward(const MlpModel& model, const Matrix& batch);

// Row-wise softmax of the logits at temperature 1.
Matrix predict_proba(const MlpModel& model, const Matrix& batch);

struct CrossEntropyLoss {
  const Matrix& onehot;
};

// Loss is T^2 * mean_b KL(teacher_soft_b || softmax(student_b / T)); the T^2
// factor keeps gradient magnitudes comparable across temperatures.
struct DistillLoss {
  const Matrix& teacher_soft;
  double temperature;
};

using LossKind = std::variant<CrossEntropyLoss, DistillLoss>;

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

LossAndGradients mlp_backward(const MlpModel& model, const Matrix& batch,
                              const LossKind& loss);

// p <- p - lr * g for every parameter. Counts as one training step.
void sgd_step(MlpModel& model, const Gradients& grads, double lr);

// Process-wide count of sgd_step calls. Used to prove that unlearning paths
// perform no training.
std::uint64_t training_step_count();

}  // namespace hdus

#endif  // HDUS_MLP_H_
