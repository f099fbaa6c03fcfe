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

#ifndef HDUS_LOSSES_H_
#define HDUS_LOSSES_H_

#include <cstddef>
#include <span>
#include <vector>

#include "hdus/matrix.h"

namespace hdus {

inline constexpr double kKlClamp = 1e-12;

// Temperature softmax exp(d_i/T) / sum_j exp(d_j/T), max-subtracted.
std::vector<double> softmax_temp(std::span<const double> logits,
                                 double temperature);

// Row-wise temperature softmax.
Matrix softmax_rows(const Matrix& logits, double temperature = 1.0);

// sum_i p_i ln(p_i / max(q_i, 1e-12)). Terms with p_i = 0 contribute 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Mean over rows of -ln softmax(logits)[true class], via log-sum-exp.
double cross_entropy(const Matrix& logits, const Matrix& onehot);

Matrix one_hot(std::span<const int> labels, std::size_t class_count);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels);

}  // namespace hdus

#endif  // HDUS_LOSSES_H_
