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

#include <benchmark/benchmark.h>

#include "hdus/distillation.h"
#include "hdus/losses.h"
#include "hdus/mlp.h"
#include "hdus/network.h"
#include "hdus/seed_repository.h"

namespace hdus {
namespace {

constexpr std::size_t kF = 20;
constexpr std::size_t kC = 10;

Matrix random_batch(std::size_t rows, Rng& rng) {
  Matrix x(rows, kF);
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& v : x.row(r)) v = rng.normal();
  }
  return x;
}

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const auto tier = static_cast<ModelTier>(state.range(0));
  const MlpModel model = init_mlp(tier_spec(tier, kF, kC), rng);
  const Matrix x = random_batch(32, rng);
  std::vector<int> y(32);
  for (int& v : y) v = static_cast<int>(rng.uniform_index(kC));
  const Matrix onehot = one_hot(y, kC);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mlp_backward(model, x, CrossEntropyLoss{onehot}));
  }
  state.SetLabel(std::string(tier_name(tier)));
}
BENCHMARK(BM_ForwardBackward)->Arg(0)->Arg(1)->Arg(2);

void BM_IncubateSeed(benchmark::State& state) {
  Rng rng(2);
  const MlpModel main = init_mlp(tier_spec(ModelTier::kLarge, kF, kC), rng);
  ReferenceSet ref{random_batch(static_cast<std::size_t>(state.range(0)), rng), {}};
  const DistillConfig cfg{.temperature = 3.0, .epochs = 1, .lr = 0.05, .batch_size = 32};
  for (auto _ : state) {
    Rng r(3);
    benchmark::DoNotOptimize(
        incubate_seed(main, tier_spec(ModelTier::kSmall, kF, kC), ref, cfg, r));
  }
}
BENCHMARK(BM_IncubateSeed)->Arg(256)->Arg(1000);

SeedRepository full_repository(std::size_t neighbors, Rng& rng) {
  SeedRepository repo(ClientId{0}, kF, kC);
  for (std::size_t k = 1; k <= neighbors; ++k) {
    repo = add_neighbor_seed(std::move(repo), ClientId{static_cast<int>(k)},
                             init_mlp(tier_spec(ModelTier::kSmall, kF, kC), rng));
  }
  return repo;
}

void BM_EnsemblePredict(benchmark::State& state) {
  Rng rng(4);
  const MlpModel main = init_mlp(tier_spec(ModelTier::kMedium, kF, kC), rng);
  const SeedRepository repo = full_repository(static_cast<std::size_t>(state.range(0)), rng);
  const Matrix x = random_batch(256, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensemble_predict(main, repo, EnsembleConfig{}, x));
  }
}
BENCHMARK(BM_EnsemblePredict)->Arg(0)->Arg(4)->Arg(16);

void BM_UnlearnNeighbor(benchmark::State& state) {
  Rng rng(5);
  const SeedRepository repo = full_repository(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(unlearn_neighbor(repo, ClientId{1}));
  }
}
BENCHMARK(BM_UnlearnNeighbor)->Arg(4)->Arg(16);

}  // namespace
}  // namespace hdus
BENCHMARK_MAIN();
