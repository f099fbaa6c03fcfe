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

#include "hdus/mlp.h"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "hdus/error.h"
#include "hdus/losses.h"

namespace hdus {

namespace {

std::atomic<std::uint64_t> g_training_steps{0};

// out[B x out] = a[B x in] * w[in x out] + bias
Matrix affine(const Matrix& a, const DenseLayer& layer) {
  const Matrix& w = layer.weight;
  Matrix out(a.rows(), w.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    std::ranges::copy(layer.bias, dst.begin());
    auto src = a.row(i);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double v = src[k];
      if (v == 0.0) continue;
      auto wk = w.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += v * wk[j];
    }
  }
  return out;
}

void relu_inplace(Matrix& m) {
  for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
}

void check_input(const MlpModel& model, const Matrix& batch) {
  if (model.layers().empty()) fail(ErrorCode::kDimension, "model has no layers");
  if (batch.cols() != model.spec().input_dim()) {
    fail(ErrorCode::kDimension,
         "layer 0 expects " + std::to_string(model.spec().input_dim()) +
             " inputs, batch has " + std::to_string(batch.cols()) + " columns");
  }
}

// Activations entering each layer; the last entry is the logits.
std::vector<Matrix> forward_trace(const MlpModel& model, const Matrix& batch) {
  check_input(model, batch);
  std::vector<Matrix> trace;
  trace.reserve(model.layers().size() + 1);
  trace.push_back(batch);
  const auto layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = affine(trace.back(), layers[l]);
    if (l + 1 < layers.size()) relu_inplace(z);
    trace.push_back(std::move(z));
  }
  return trace;
}

// Returns (loss, dL/dlogits).
std::pair<double, Matrix> output_gradient(const Matrix& logits,
                                          const LossKind& kind) {
  const auto batch = static_cast<double>(logits.rows());
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&kind)) {
    if (ce->onehot.rows() != logits.rows() || ce->onehot.cols() != logits.cols()) {
      fail(ErrorCode::kDimension, "one-hot targets are " +
                                      std::to_string(ce->onehot.rows()) + "x" +
                                      std::to_string(ce->onehot.cols()) +
                                      ", output layer gives " +
                                      std::to_string(logits.rows()) + "x" +
                                      std::to_string(logits.cols()));
    }
    const double loss = cross_entropy(logits, ce->onehot);
    Matrix delta = softmax_rows(logits, 1.0);
    auto d = delta.values();
    auto y = ce->onehot.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (d[i] - y[i]) / batch;
    return {loss, std::move(delta)};
  }
  const auto& dl = std::get<DistillLoss>(kind);
  const double t = dl.temperature;
  if (!(t > 0.0)) fail(ErrorCode::kDomain, "temperature must be positive");
  if (dl.teacher_soft.rows() != logits.rows() ||
      dl.teacher_soft.cols() != logits.cols()) {
    fail(ErrorCode::kDimension, "teacher targets are " +
                                    std::to_string(dl.teacher_soft.rows()) +
                                    "x" + std::to_string(dl.teacher_soft.cols()) +
                                    ", output layer gives " +
                                    std::to_string(logits.rows()) + "x" +
                                    std::to_string(logits.cols()));
  }
  Matrix delta(logits.rows(), logits.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto p = dl.teacher_soft.row(r);
    const double peak = *std::ranges::max_element(z);
    double sum = 0.0;
    for (double v : z) sum += std::exp((v - peak) / t);
    const double log_norm = std::log(sum);
    auto out = delta.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double log_q = (z[c] - peak) / t - log_norm;
      if (p[c] > 0.0) loss += p[c] * (std::log(p[c]) - log_q);
      // d/dz of T^2 * KL = T * (q - p)
      out[c] = t * (std::exp(log_q) - p[c]) / batch;
    }
  }
  return {t * t * loss / batch, std::move(delta)};
}

}  // namespace

void MlpSpec::validate() const {
  if (layer_dims.size() < 2) {
    fail(ErrorCode::kValidation, "MLP spec needs at least input and output dims");
  }
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (layer_dims[i] == 0) {
      fail(ErrorCode::kValidation, "MLP dim " + std::to_string(i) + " is zero");
    }
  }
}

std::string MlpSpec::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(layer_dims[i]);
  }
  return out + "]";
}

std::size_t parameter_count(const MlpSpec& spec) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    total += spec.layer_dims[l] * spec.layer_dims[l + 1] + spec.layer_dims[l + 1];
  }
  return total;
}

MlpSpec tier_spec(ModelTier tier, std::size_t features, std::size_t classes) {
  switch (tier) {
    case ModelTier::kSmall: return MlpSpec{{features, 16, classes}};
    case ModelTier::kMedium: return MlpSpec{{features, 64, classes}};
    case ModelTier::kLarge: return MlpSpec{{features, 128, 64, classes}};
  }
  fail(ErrorCode::kValidation, "unknown model tier");
}

std::string_view tier_name(ModelTier tier) {
  switch (tier) {
    case ModelTier::kSmall: return "small";
    case ModelTier::kMedium: return "medium";
    case ModelTier::kLarge: return "large";
  }
  return "?";
}

ModelTier parse_tier(std::string_view name) {
  if (name == "small") return ModelTier::kSmall;
  if (name == "medium") return ModelTier::kMedium;
  if (name == "large") return ModelTier::kLarge;
  fail(ErrorCode::kConfig, "unknown model tier '" + std::string(name) + "'");
}

MlpModel::MlpModel(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  layers_.reserve(spec_.layer_count());
  for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
    layers_.push_back(DenseLayer{
        Matrix(spec_.layer_dims[l], spec_.layer_dims[l + 1]),
        std::vector<double>(spec_.layer_dims[l + 1], 0.0)});
  }
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.weight.values().begin(),
                layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void MlpModel::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    fail(ErrorCode::kDimension, "flat parameter vector has " +
                                    std::to_string(flat.size()) +
                                    " entries, model " + spec_.to_string() +
                                    " needs " + std::to_string(parameter_count()));
  }
  std::size_t at = 0;
  for (auto& layer : layers_) {
    for (double& w : layer.weight.values()) w = flat[at++];
    for (double& b : layer.bias) b = flat[at++];
  }
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> flat;
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weight.values().begin(),
                layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

double Gradients::max_abs() const {
  double worst = 0.0;
  for (double v : flatten()) worst = std::max(worst, std::abs(v));
  return worst;
}

MlpModel init_mlp(const MlpSpec& spec, Rng& rng) {
  MlpModel model(spec);
  for (auto& layer : model.layers()) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(layer.weight.rows()));
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  }
  return model;
}

Matrix mlp_forward(const MlpModel& model, const Matrix& batch) {
  auto trace = forward_trace(model, batch);
  return std::move(trace.back());
}

Matrix predict_proba(const MlpModel& model, const Matrix& batch) {
  return softmax_rows(mlp_forward(model, batch), 1.0);
}

LossAndGradients mlp_backward(const MlpModel& model, const Matrix& batch,
                              const LossKind& loss) {
  auto trace = forward_trace(model, batch);
  if (!all_finite(trace.back().values())) {
    fail(ErrorCode::kDivergence, "non-finite logits during training");
  }
  auto [value, delta] = output_gradient(trace.back(), loss);

  const auto layers = model.layers();
  LossAndGradients result;
  result.loss = value;
  result.grads.layers.resize(layers.size());

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& input = trace[l];
    const DenseLayer& layer = layers[l];
    DenseLayer& g = result.grads.layers[l];
    g.weight = Matrix(layer.weight.rows(), layer.weight.cols());
    g.bias.assign(layer.bias.size(), 0.0);
    for (std::size_t b = 0; b < input.rows(); ++b) {
      auto a = input.row(b);
      auto d = delta.row(b);
      for (std::size_t j = 0; j < d.size(); ++j) g.bias[j] += d[j];
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double v = a[k];
        if (v == 0.0) continue;
        auto gk = g.weight.row(k);
        for (std::size_t j = 0; j < d.size(); ++j) gk[j] += v * d[j];
      }
    }
    if (l == 0) break;
    // Propagate through weight^T and the ReLU mask of the previous layer.
    Matrix prev(input.rows(), input.cols());
    for (std::size_t b = 0; b < input.rows(); ++b) {
      auto a = input.row(b);
      auto d = delta.row(b);
      auto out = prev.row(b);
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] <= 0.0) continue;
        auto wk = layer.weight.row(k);
        double sum = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) sum += wk[j] * d[j];
        out[k] = sum;
      }
    }
    delta = std::move(prev);
  }
  return result;
}

void sgd_step(MlpModel& model, const Gradients& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    fail(ErrorCode::kDomain, "learning rate must be non-negative and finite");
  }
  auto layers = model.layers();
  if (grads.layers.size() != layers.size()) {
    fail(ErrorCode::kDimension, "gradient layer count does not match model");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = grads.layers[l];
    if (g.weight.rows() != layers[l].weight.rows() ||
        g.weight.cols() != layers[l].weight.cols() ||
        g.bias.size() != layers[l].bias.size()) {
      fail(ErrorCode::kDimension,
           "gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!all_finite(g.weight.values()) || !all_finite(g.bias)) {
      fail(ErrorCode::kDivergence,
           "non-finite gradient at layer " + std::to_string(l));
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weight.values();
    auto gw = grads.layers[l].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    auto& b = layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
  g_training_steps.fetch_add(1, std::memory_order_relaxed);
}

std::uint64_t training_step_count() {
  return g_training_steps.load(std::memory_order_relaxed);
}

}  // namespace hdus
