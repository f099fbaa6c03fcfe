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

#include "hdus/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdus/error.h"

namespace hdus {

namespace {

void check_probability(std::span<const double> v, const char* name) {
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      fail(ErrorCode::kDomain, std::string(name) + " has an invalid entry");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::kDomain,
         std::string(name) + " sums to " + std::to_string(sum) + ", not 1");
  }
}

void softmax_into(std::span<const double> logits, double temperature,
                  std::span<double> out) {
  const double peak = *std::ranges::max_element(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - peak) / temperature);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

}  // namespace

std::vector<double> softmax_temp(std::span<const double> logits,
                                 double temperature) {
  if (!(temperature > 0.0)) {
    fail(ErrorCode::kDomain, "temperature must be positive, got " +
                                 std::to_string(temperature));
  }
  if (logits.empty()) fail(ErrorCode::kDimension, "softmax of empty vector");
  if (!all_finite(logits)) fail(ErrorCode::kDomain, "non-finite logit");
  std::vector<double> out(logits.size());
  softmax_into(logits, temperature, out);
  return out;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) {
    fail(ErrorCode::kDomain, "temperature must be positive, got " +
                                 std::to_string(temperature));
  }
  if (!all_finite(logits.values())) fail(ErrorCode::kDomain, "non-finite logit");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    softmax_into(logits.row(r), temperature, out.row(r));
  }
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::kDimension, "kl_divergence length mismatch " +
                                    std::to_string(p.size()) + " vs " +
                                    std::to_string(q.size()));
  }
  check_probability(p, "p");
  check_probability(q, "q");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    total += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kKlClamp)));
  }
  return total;
}

double cross_entropy(const Matrix& logits, const Matrix& onehot) {
  if (logits.rows() != onehot.rows() || logits.cols() != onehot.cols()) {
    fail(ErrorCode::kDimension, "cross_entropy shape mismatch");
  }
  if (logits.rows() == 0) fail(ErrorCode::kDomain, "cross_entropy of empty batch");
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto y = onehot.row(r);
    std::size_t hot = y.size();
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (y[c] == 1.0 && hot == y.size()) {
        hot = c;
      } else if (y[c] != 0.0) {
        hot = y.size() + 1;
        break;
      }
    }
    if (hot >= y.size()) {
      fail(ErrorCode::kValidation,
           "row " + std::to_string(r) + " is not a one-hot vector");
    }
    auto z = logits.row(r);
    const double peak = *std::ranges::max_element(z);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - peak);
    total += peak + std::log(sum) - z[hot];
  }
  return total / static_cast<double>(logits.rows());
}

Matrix one_hot(std::span<const int> labels, std::size_t class_count) {
  Matrix out(labels.size(), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      fail(ErrorCode::kValidation, "label " + std::to_string(labels[i]) +
                                       " outside [0, " +
                                       std::to_string(class_count) + ")");
    }
    out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0) fail(ErrorCode::kDomain, "accuracy of empty batch");
  if (labels.size() != logits.rows()) {
    fail(ErrorCode::kDimension, "accuracy: label count does not match rows");
  }
  std::size_t hits = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (static_cast<int>(argmax(logits.row(r))) == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace hdus
