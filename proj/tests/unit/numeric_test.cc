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

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <memory>
#include <vector>

#include "hdus/error.h"
#include "hdus/losses.h"
#include "hdus/matrix.h"
#include "hdus/mlp.h"
#include "hdus/rng.h"

namespace hdus {
namespace {

// Central finite difference of `loss_at(flat)` over every parameter.
template <typename LossFn>
std::vector<double> numeric_gradient(const MlpModel& model, LossFn loss_at) {
  std::vector<double> flat = model.flatten();
  std::vector<double> grad(flat.size());
  const double h = 1e-5;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double orig = flat[k];
    flat[k] = orig + h;
    const double up = loss_at(flat);
    flat[k] = orig - h;
    const double down = loss_at(flat);
    flat[k] = orig;
    grad[k] = (up - down) / (2 * h);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), 1e-6});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

TEST(Rng, DerivedStreamsAreReproducibleAndIndependent) {
  Rng a = Rng::derive(7, StreamPurpose::kTrain, 3);
  Rng b = Rng::derive(7, StreamPurpose::kTrain, 3);
  Rng c = Rng::derive(7, StreamPurpose::kTrain, 4);
  Rng d = Rng::derive(7, StreamPurpose::kIncubate, 3);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng::derive(7, StreamPurpose::kTrain, 3).next_u64(), c.next_u64());
  EXPECT_NE(Rng::derive(7, StreamPurpose::kTrain, 3).next_u64(), d.next_u64());
}

TEST(Rng, UniformIndexStaysInRangeAndPermutationIsBijective) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.uniform_index(7), 7u);
  auto p = rng.permutation(50);
  std::vector<bool> seen(50, false);
  for (auto v : p) seen.at(v) = true;
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));
}

TEST(Rng, NormalHasUnitMoments) {
  Rng rng(5);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Matrix, SelectRowsCopiesInOrder) {
  Matrix m{{1, 2}, {3, 4}, {5, 6}};
  std::vector<std::size_t> idx{2, 0};
  EXPECT_EQ(select_rows(m, idx), (Matrix{{5, 6}, {1, 2}}));
}

TEST(MlpForward, ZeroModelGivesZeroLogits) {
  MlpModel model(MlpSpec{{3, 4, 2}});
  Matrix out = mlp_forward(model, Matrix{{1, -2, 3}, {0.5, 0.5, 9}});
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(MlpForward, IdentitySingleLayer) {
  MlpModel model(MlpSpec{{3, 3}});
  auto& w = model.layers()[0].weight;
  for (std::size_t i = 0; i < 3; ++i) w(i, i) = 1.0;
  Matrix out = mlp_forward(model, Matrix{{1, 2, 3}});
  EXPECT_EQ(out, (Matrix{{1, 2, 3}}));
}

TEST(MlpForward, TwoLayerMatchesHandArithmetic) {
  // 2 -> 2 (ReLU) -> 1.
  MlpModel model(MlpSpec{{2, 2, 1}});
  auto l0 = model.layers()[0];
  l0.weight = Matrix{{1.0, -2.0}, {0.5, 1.0}};
  l0.bias = {0.1, -0.3};
  model.layers()[0] = l0;
  model.layers()[1].weight = Matrix{{2.0}, {-1.0}};
  model.layers()[1].bias = {0.25};
  // x = (3, -1): h0 = 3*1 + -1*0.5 + 0.1 = 2.6; h1 = 3*-2 + -1*1 - 0.3 = -7.3 -> 0.
  // out = 2.6*2 + 0*-1 + 0.25 = 5.45.
  Matrix out = mlp_forward(model, Matrix{{3.0, -1.0}});
  EXPECT_NEAR(out(0, 0), 5.45, 1e-15);
}

TEST(MlpForward, ShapeMismatchNamesLayer) {
  MlpModel model(MlpSpec{{3, 2}});
  try {
    mlp_forward(model, Matrix(1, 4));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimension);
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
}

TEST(SoftmaxTemp, UniformLogits) {
  for (double t : {0.5, 1.0, 7.0}) {
    auto p = softmax_temp(std::vector<double>{0, 0, 0}, t);
    for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  }
}

TEST(SoftmaxTemp, KnownTwoClassValues) {
  auto p = softmax_temp(std::vector<double>{1, 2}, 1.0);
  // 1 / (1 + e) and e / (1 + e).
  EXPECT_NEAR(p[0], 0.2689414213699951, 1e-15);
  EXPECT_NEAR(p[1], 0.7310585786300049, 1e-15);
  auto q = softmax_temp(std::vector<double>{2, 4}, 2.0);
  EXPECT_NEAR(q[0], p[0], 1e-15);
  EXPECT_NEAR(q[1], p[1], 1e-15);
}

TEST(SoftmaxTemp, RejectsNonPositiveTemperature) {
  std::vector<double> d{1, 2};
  for (double t : {0.0, -1.0}) {
    try {
      softmax_temp(d, t);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
  }
}

TEST(SoftmaxTemp, PropertiesOverRandomInputs) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(2 + rng.uniform_index(10));
    for (double& v : d) v = rng.uniform(-30, 30);
    const double t = std::exp(rng.uniform(std::log(0.1), std::log(100.0)));
    auto p = softmax_temp(d, t);
    double sum = 0;
    for (double v : p) {
      sum += v;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(argmax(p), argmax(d));
    // T = 1 against the textbook formula.
    auto s = softmax_temp(d, 1.0);
    double m = *std::max_element(d.begin(), d.end()), z = 0;
    for (double v : d) z += std::exp(v - m);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(s[i], std::exp(d[i] - m) / z, 1e-15);
    }
  }
}

TEST(SoftmaxTemp, SurvivesHugeLogits) {
  auto p = softmax_temp(std::vector<double>{1000, 0, -1000}, 1.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_TRUE(all_finite(p));
}

TEST(KlDivergence, KnownValueAndIdentity) {
  std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  EXPECT_NEAR(kl_divergence(p, q), expected, 1e-15);
  EXPECT_NEAR(kl_divergence(p, q), 0.143841, 1e-6);
  EXPECT_EQ(kl_divergence(p, p), 0.0);
}

TEST(KlDivergence, NonNegativeOnRandomPairs) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> a(5), b(5);
    for (double& v : a) v = rng.uniform(-4, 4);
    for (double& v : b) v = rng.uniform(-4, 4);
    EXPECT_GE(kl_divergence(softmax_temp(a, 1.0), softmax_temp(b, 1.0)), -1e-12);
  }
}

TEST(KlDivergence, ClampsZeroTargetProbability) {
  std::vector<double> p{1.0, 0.0}, q{0.0, 1.0};
  EXPECT_NEAR(kl_divergence(p, q), -std::log(kKlClamp), 1e-9);
}

TEST(KlDivergence, RejectsBadInputs) {
  std::vector<double> p{0.5, 0.5}, q3{0.2, 0.3, 0.5}, bad{0.5, 0.6};
  EXPECT_THROW(kl_divergence(p, q3), Error);
  EXPECT_THROW(kl_divergence(p, bad), Error);
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  Matrix logits(3, 10, 0.0);
  std::vector<int> y{0, 4, 9};
  EXPECT_NEAR(cross_entropy(logits, one_hot(y, 10)), std::log(10.0), 1e-15);
  EXPECT_NEAR(std::log(10.0), 2.302585, 1e-6);
}

TEST(CrossEntropy, SaturatedAndHandSet) {
  Matrix sat{{50, 0, 0}};
  std::vector<int> y0{0};
  EXPECT_LT(cross_entropy(sat, one_hot(y0, 3)), 1e-20);
  // Rows (1,2) label 1 and (3,0) label 0.
  Matrix logits{{1, 2}, {3, 0}};
  std::vector<int> y{1, 0};
  const double r0 = std::log(std::exp(1.0) + std::exp(2.0)) - 2.0;
  const double r1 = std::log(std::exp(3.0) + 1.0) - 3.0;
  EXPECT_NEAR(cross_entropy(logits, one_hot(y, 2)), (r0 + r1) / 2, 1e-15);
}

TEST(CrossEntropy, MalformedOneHotIsValidationError) {
  Matrix logits(1, 3);
  Matrix bad{{0.5, 0.5, 0.0}};
  try {
    cross_entropy(logits, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
}

TEST(Accuracy, AlignedAntiAlignedMixedAndTies) {
  Matrix aligned{{1, 0}, {0, 1}};
  std::vector<int> y{0, 1};
  EXPECT_EQ(accuracy(aligned, y), 1.0);
  std::vector<int> flipped{1, 0};
  EXPECT_EQ(accuracy(aligned, flipped), 0.0);
  Matrix mixed{{3, 1, 0}, {0, 2, 1}, {1, 0, 5}, {0, 4, 1}};
  std::vector<int> ym{0, 2, 1, 1};
  EXPECT_EQ(accuracy(mixed, ym), 0.5);
  Matrix tie{{1, 1, 1}};
  std::vector<int> t0{0}, t1{1};
  EXPECT_EQ(accuracy(tie, t0), 1.0);
  EXPECT_EQ(accuracy(tie, t1), 0.0);
  EXPECT_THROW(accuracy(Matrix(0, 3), std::vector<int>{}), Error);
}

TEST(MlpBackward, CrossEntropyMatchesFiniteDifferences) {
  Rng rng(99);
  for (int net = 0; net < 12; ++net) {
    MlpSpec spec{{2 + rng.uniform_index(8), 2 + rng.uniform_index(9), 2 + rng.uniform_index(9)}};
    if (net % 3 == 0) spec.layer_dims.insert(spec.layer_dims.begin() + 2, 3 + rng.uniform_index(7));
    MlpModel model = init_mlp(spec, rng);
    for (auto& layer : model.layers()) {
      for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
    }
    const Matrix x = random_matrix(5, spec.input_dim(), rng);
    std::vector<int> y(5);
    for (int& v : y) v = static_cast<int>(rng.uniform_index(spec.output_dim()));
    const Matrix onehot = one_hot(y, spec.output_dim());
    auto analytic = mlp_backward(model, x, CrossEntropyLoss{onehot});
    EXPECT_NEAR(analytic.loss, cross_entropy(mlp_forward(model, x), onehot), 1e-12);
    auto numeric = numeric_gradient(model, [&](const std::vector<double>& flat) {
      MlpModel m = model;
      m.assign(flat);
      return cross_entropy(mlp_forward(m, x), onehot);
    });
    EXPECT_LE(max_relative_error(analytic.grads.flatten(), numeric), 1e-4) << spec.to_string();
  }
}

TEST(MlpBackward, DistillMatchesFiniteDifferences) {
  Rng rng(100);
  for (int net = 0; net < 12; ++net) {
    MlpSpec spec{{2 + rng.uniform_index(8), 2 + rng.uniform_index(9), 2 + rng.uniform_index(9)}};
    MlpModel model = init_mlp(spec, rng);
    const Matrix x = random_matrix(4, spec.input_dim(), rng);
    const double t = rng.uniform(0.5, 5.0);
    const Matrix teacher = softmax_rows(random_matrix(4, spec.output_dim(), rng), t);
    auto loss_of = [&](const MlpModel& m) {
      const Matrix student = softmax_rows(mlp_forward(m, x), t);
      double sum = 0;
      for (std::size_t r = 0; r < 4; ++r) sum += kl_divergence(teacher.row(r), student.row(r));
      return t * t * sum / 4.0;
    };
    auto analytic = mlp_backward(model, x, DistillLoss{teacher, t});
    EXPECT_NEAR(analytic.loss, loss_of(model), 1e-12);
    auto numeric = numeric_gradient(model, [&](const std::vector<double>& flat) {
      MlpModel m = model;
      m.assign(flat);
      return loss_of(m);
    });
    EXPECT_LE(max_relative_error(analytic.grads.flatten(), numeric), 1e-4) << spec.to_string();
  }
}

TEST(MlpBackward, DistillGradientVanishesAtPerfectFit) {
  Rng rng(4);
  MlpModel model = init_mlp(MlpSpec{{4, 8, 3}}, rng);
  const Matrix x = random_matrix(6, 4, rng);
  const Matrix soft = softmax_rows(mlp_forward(model, x), 2.0);
  auto out = mlp_backward(model, x, DistillLoss{soft, 2.0});
  EXPECT_LE(out.grads.max_abs(), 1e-10);
  EXPECT_NEAR(out.loss, 0.0, 1e-12);
}

TEST(MlpBackward, CrossEntropyIdentityNetClosedForm) {
  MlpModel model(MlpSpec{{3, 3}});
  for (std::size_t i = 0; i < 3; ++i) model.layers()[0].weight(i, i) = 1.0;
  const Matrix x{{0.2, -1.0, 0.7}};
  std::vector<int> y{2};
  const Matrix onehot = one_hot(y, 3);
  auto out = mlp_backward(model, x, CrossEntropyLoss{onehot});
  auto p = softmax_temp(x.row(0), 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double expected = x(0, i) * (p[j] - onehot(0, j));
      EXPECT_NEAR(out.grads.layers[0].weight(i, j), expected, 1e-15);
    }
    EXPECT_NEAR(out.grads.layers[0].bias[i], p[i] - onehot(0, i), 1e-15);
  }
}

TEST(SgdStep, ArithmeticLinearityAndNoOp) {
  MlpModel model(MlpSpec{{1, 1}});
  model.layers()[0].weight(0, 0) = 1.0;
  Gradients g{{DenseLayer{Matrix{{2.0}}, {0.0}}}};
  sgd_step(model, g, 0.1);
  EXPECT_NEAR(model.layers()[0].weight(0, 0), 0.8, 1e-15);

  Rng rng(8);
  MlpModel a = init_mlp(MlpSpec{{3, 4, 2}}, rng);
  MlpModel unchanged = a;
  const Matrix x = random_matrix(3, 3, rng);
  std::vector<int> y{0, 1, 1};
  const Matrix onehot = one_hot(y, 2);
  auto grads = mlp_backward(a, x, CrossEntropyLoss{onehot}).grads;
  sgd_step(a, grads, 0.0);
  EXPECT_EQ(a, unchanged);

  // Two steps with fixed gradients equal one step with the summed delta.
  MlpModel twice = a, once = a;
  sgd_step(twice, grads, 0.1);
  sgd_step(twice, grads, 0.1);
  sgd_step(once, grads, 0.2);
  EXPECT_LE(max_abs_diff(Matrix(1, twice.flatten().size(), twice.flatten()),
                         Matrix(1, once.flatten().size(), once.flatten())),
            1e-15);
}

TEST(SgdStep, NonFiniteGradientIsDivergence) {
  MlpModel model(MlpSpec{{1, 1}});
  Gradients g{{DenseLayer{Matrix{{std::numeric_limits<double>::quiet_NaN()}}, {0.0}}}};
  try {
    sgd_step(model, g, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
  }
}

TEST(SgdStep, CountsTrainingSteps) {
  MlpModel model(MlpSpec{{1, 1}});
  Gradients g{{DenseLayer{Matrix{{1.0}}, {0.0}}}};
  const auto before = training_step_count();
  sgd_step(model, g, 0.1);
  sgd_step(model, g, 0.1);
  EXPECT_EQ(training_step_count() - before, 2u);
}

TEST(InitMlp, DeterministicAndBounded) {
  const MlpSpec spec = tier_spec(ModelTier::kLarge, 20, 10);
  Rng r1(1), r2(1), r3(2);
  MlpModel a = init_mlp(spec, r1), b = init_mlp(spec, r2), c = init_mlp(spec, r3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& layer : a.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.rows()));
    for (double w : layer.weight.values()) EXPECT_LE(std::abs(w), bound);
    for (double v : layer.bias) EXPECT_EQ(v, 0.0);
  }
}

TEST(MlpSpec, TiersAndParameterCounts) {
  EXPECT_EQ(tier_spec(ModelTier::kSmall, 20, 10).layer_dims, (std::vector<std::size_t>{20, 16, 10}));
  EXPECT_EQ(tier_spec(ModelTier::kMedium, 20, 10).layer_dims, (std::vector<std::size_t>{20, 64, 10}));
  EXPECT_EQ(tier_spec(ModelTier::kLarge, 20, 10).layer_dims,
            (std::vector<std::size_t>{20, 128, 64, 10}));
  EXPECT_EQ(parameter_count(MlpSpec{{20, 16, 10}}), 20u * 16 + 16 + 16 * 10 + 10);
  EXPECT_THROW(MlpSpec{{5}}.validate(), Error);
  EXPECT_THROW(MlpSpec({{5, 0, 2}}).validate(), Error);
  MlpModel m = init_mlp(MlpSpec{{3, 4, 2}}, *std::make_unique<Rng>(3));
  MlpModel copy(m.spec());
  copy.assign(m.flatten());
  EXPECT_EQ(copy, m);
}

}  // namespace
}  // namespace hdus
