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

#include <algorithm>
#include <cmath>

#include "hdus/baselines.h"
#include "hdus/error.h"
#include "hdus/event_log.h"
#include "hdus/network.h"
#include "hdus/seed_codec.h"

namespace hdus {
namespace {

constexpr std::size_t kF = 6;
constexpr std::size_t kC = 4;

PartitionedDataset small_partition(std::size_t clients, std::uint64_t seed) {
  Rng rng(seed);
  const LabeledDataset d = gen_blobs(
      BlobParams{.n_per_class = 80, .classes = kC, .features = kF, .spread = 0.4}, rng);
  return partition_noniid(d, clients, 60, 0.2, rng);
}

SimConfig small_sim() {
  SimConfig sim;
  sim.local = {.epochs = 1, .lr = 0.05, .batch_size = 16};
  sim.distill = {.temperature = 3.0, .epochs = 2, .lr = 0.05, .batch_size = 16};
  sim.seed_spec = tier_spec(ModelTier::kSmall, kF, kC);
  return sim;
}

std::vector<MlpSpec> mixed_specs(std::size_t n) {
  std::vector<MlpSpec> specs;
  for (std::size_t i = 0; i < n; ++i) {
    specs.push_back(tier_spec(static_cast<ModelTier>(i % 3), kF, kC));
  }
  return specs;
}

std::vector<std::vector<double>> all_main_params(const std::vector<ClientState>& clients) {
  std::vector<std::vector<double>> out;
  for (const auto& c : clients) out.push_back(c.main.flatten());
  return out;
}

TEST(Topology, CompleteEmptyAndValidation) {
  const Topology t = Topology::complete(4);
  EXPECT_EQ(t.neighbors(ClientId{2}), (std::vector<int>{0, 1, 3}));
  EXPECT_TRUE(t.connected(ClientId{0}, ClientId{3}));
  EXPECT_TRUE(Topology::empty(3).neighbors(ClientId{1}).empty());
  const Topology w = t.without(ClientId{1});
  EXPECT_EQ(w.neighbors(ClientId{0}), (std::vector<int>{2, 3}));
  EXPECT_TRUE(w.neighbors(ClientId{1}).empty());
  EXPECT_THROW(Topology({{1}, {}}), Error);          // asymmetric
  EXPECT_THROW(Topology(std::vector<std::vector<int>>{{0}}), Error);  // self-loop
  EXPECT_THROW(Topology({{1, 1}, {0, 0}}), Error);   // duplicate
}

TEST(InitNetwork, DeterministicAndValidated) {
  const auto parts = small_partition(3, 1);
  const auto topo = Topology::complete(3);
  auto a = init_network(parts, mixed_specs(3), topo, small_sim(), 7);
  auto b = init_network(parts, mixed_specs(3), topo, small_sim(), 7);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].main, b[i].main);
    EXPECT_EQ(a[i].main.spec(), mixed_specs(3)[i]);
    EXPECT_TRUE(a[i].repo.snapshot()->empty());
    EXPECT_EQ(a[i].initial_main, a[i].main);
  }
  EXPECT_NE(a[0].train_rng, a[1].train_rng);
  try {
    init_network(parts, mixed_specs(2), topo, small_sim(), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(RunRound, CompleteGraphFillsRepositories) {
  const auto parts = small_partition(4, 2);
  const auto topo = Topology::complete(4);
  auto clients = init_network(parts, mixed_specs(4), topo, small_sim(), 3);
  run_round(clients, topo, small_sim(), 1);
  for (const auto& c : clients) {
    auto repo = c.repo.snapshot();
    EXPECT_EQ(repo->size(), 3u);
    EXPECT_FALSE(repo->contains(c.id));
    ASSERT_TRUE(c.own_seed.has_value());
  }
  // A second round replaces rather than appends.
  run_round(clients, topo, small_sim(), 2);
  for (const auto& c : clients) EXPECT_EQ(c.repo.snapshot()->size(), 3u);
}

TEST(RunRound, IsolatedClientsMatchIsgd) {
  const auto parts = small_partition(3, 4);
  const auto sim = small_sim();
  auto hdus = init_network(parts, mixed_specs(3), Topology::empty(3), sim, 5);
  auto isgd = init_network(parts, mixed_specs(3), Topology::empty(3), sim, 5);
  for (int r = 1; r <= 3; ++r) {
    run_round(hdus, Topology::empty(3), sim, r);
    isgd_round(isgd, sim);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(hdus[i].main, isgd[i].main);
    EXPECT_TRUE(hdus[i].repo.snapshot()->empty());
  }
}

TEST(RunRound, MainModelsIgnoreSeedExchange) {
  // Separate train and incubation streams: exchanging seeds does not perturb
  // main-model training.
  const auto parts = small_partition(3, 6);
  const auto sim = small_sim();
  auto full = init_network(parts, mixed_specs(3), Topology::complete(3), sim, 8);
  auto alone = init_network(parts, mixed_specs(3), Topology::empty(3), sim, 8);
  for (int r = 1; r <= 2; ++r) {
    run_round(full, Topology::complete(3), sim, r);
    run_round(alone, Topology::empty(3), sim, r);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(full[i].main, alone[i].main);
}

TEST(RunRound, ParallelPhasesMatchSequential) {
  const auto parts = small_partition(4, 9);
  auto seq_cfg = small_sim();
  auto par_cfg = seq_cfg;
  par_cfg.threads = 3;
  const auto topo = Topology::complete(4);
  auto seq = init_network(parts, mixed_specs(4), topo, seq_cfg, 10);
  auto par = init_network(parts, mixed_specs(4), topo, par_cfg, 10);
  for (int r = 1; r <= 2; ++r) {
    run_round(seq, topo, seq_cfg, r);
    run_round(par, topo, par_cfg, r);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(seq[i].main, par[i].main);
    EXPECT_EQ(*seq[i].repo.snapshot(), *par[i].repo.snapshot());
  }
}

TEST(RunRound, DivergenceNamesClient) {
  const auto parts = small_partition(3, 11);
  auto sim = small_sim();
  sim.local.lr = 1e300;
  sim.local.epochs = 5;
  auto clients = init_network(parts, mixed_specs(3), Topology::complete(3), sim, 12);
  try {
    run_round(clients, Topology::complete(3), sim, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
    EXPECT_NE(std::string(e.what()).find("client"), std::string::npos) << e.what();
  }
}

TEST(RunRound, CadenceControlsIncubationAndExchange) {
  const auto parts = small_partition(3, 13);
  auto sim = small_sim();
  sim.incubate_every_rounds = 2;
  sim.exchange_every_rounds = 2;
  auto clients = init_network(parts, mixed_specs(3), Topology::complete(3), sim, 14);
  run_round(clients, Topology::complete(3), sim, 1);
  EXPECT_FALSE(clients[0].own_seed.has_value());
  EXPECT_TRUE(clients[0].repo.snapshot()->empty());
  run_round(clients, Topology::complete(3), sim, 2);
  EXPECT_TRUE(clients[0].own_seed.has_value());
  EXPECT_EQ(clients[0].repo.snapshot()->size(), 2u);
}

TEST(SeedExchange, WireCarriesOnlySeedBlobs) {
  const auto parts = small_partition(3, 15);
  const auto sim = small_sim();
  auto specs = std::vector<MlpSpec>(3, tier_spec(ModelTier::kLarge, kF, kC));
  auto clients = init_network(parts, specs, Topology::complete(3), sim, 16);
  std::size_t messages = 0;
  MessageTap tap = [&](ClientId from, ClientId to, std::span<const std::uint8_t> blob) {
    ++messages;
    EXPECT_NE(from, to);
    const MlpModel decoded = decode_seed(blob);
    EXPECT_EQ(decoded.spec(), sim.seed_spec);
    EXPECT_EQ(decoded.parameter_count(), parameter_count(sim.seed_spec));
    EXPECT_EQ(blob.size(), 12 + 4 * sim.seed_spec.layer_dims.size() +
                               8 * parameter_count(sim.seed_spec) + 4);
  };
  for (int r = 1; r <= 2; ++r) run_round(clients, Topology::complete(3), sim, r, tap);
  EXPECT_EQ(messages, 2u * 3 * 2);
}

TEST(HandleUnlearn, MatchesNeverJoinedControlWithoutTraining) {
  const auto parts = small_partition(4, 17);
  const auto sim = small_sim();
  const auto topo = Topology::complete(4);
  for (int j = 0; j < 4; ++j) {
    auto full = init_network(parts, mixed_specs(4), topo, sim, 18);
    auto control = init_network(parts, mixed_specs(4), topo.without(ClientId{j}), sim, 18);
    for (int r = 1; r <= 2; ++r) {
      run_round(full, topo, sim, r);
      run_round(control, topo.without(ClientId{j}), sim, r);
    }
    const auto params_before = all_main_params(full);
    const auto steps_before = training_step_count();
    const UnlearnReceipt receipt = handle_unlearn_request(full, ClientId{j});
    EXPECT_EQ(training_step_count(), steps_before);
    EXPECT_EQ(receipt.training_steps, 0u);
    EXPECT_EQ(receipt.repositories_updated, 3u);
    EXPECT_FALSE(full[j].active());
    EXPECT_EQ(full[j].local_data.size(), 0u);
    for (int i = 0; i < 4; ++i) {
      if (i == j) continue;
      EXPECT_EQ(*full[i].repo.snapshot(), *control[i].repo.snapshot()) << "client " << i;
      const Matrix a = ensemble_predict(full[i].main, *full[i].repo.snapshot(),
                                        sim.ensemble, parts.test.features);
      const Matrix b = ensemble_predict(control[i].main, *control[i].repo.snapshot(),
                                        sim.ensemble, parts.test.features);
      EXPECT_EQ(max_abs_diff(a, b), 0.0);
    }
    for (int i = 0; i < 4; ++i) {
      if (i == j) continue;
      EXPECT_EQ(full[i].main.flatten(), params_before[i]) << "client " << i;
    }
  }
}

TEST(HandleUnlearn, UnknownQuitAndIsolatedCases) {
  const auto parts = small_partition(3, 19);
  auto clients = init_network(parts, mixed_specs(3), Topology::empty(3), small_sim(), 20);
  run_round(clients, Topology::empty(3), small_sim(), 1);
  const UnlearnReceipt r = handle_unlearn_request(clients, ClientId{1});
  EXPECT_EQ(r.repositories_updated, 0u);
  for (ClientId bad : {ClientId{1}, ClientId{9}}) {
    try {
      handle_unlearn_request(clients, bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    }
  }
  // The quitter receives no further training.
  const auto before = clients[1].main;
  run_round(clients, Topology::empty(3), small_sim(), 2);
  EXPECT_EQ(clients[1].main, before);
}

TEST(EvaluateAll, MeanAndExclusion) {
  const auto parts = small_partition(3, 21);
  const auto sim = small_sim();
  auto same = std::vector<MlpSpec>(3, tier_spec(ModelTier::kSmall, kF, kC));
  auto clients = init_network(parts, same, Topology::complete(3), sim, 22);
  // Identical mains and lambda 0: identical accuracies.
  for (auto& c : clients) c.main = clients[0].main;
  const Evaluation e0 = evaluate_all(clients, parts.test, EnsembleConfig{.lambda = 0.0});
  ASSERT_EQ(e0.per_client.size(), 3u);
  EXPECT_EQ(e0.per_client[0].accuracy, e0.per_client[1].accuracy);
  EXPECT_EQ(e0.per_client[1].accuracy, e0.per_client[2].accuracy);

  run_round(clients, Topology::complete(3), sim, 1);
  handle_unlearn_request(clients, ClientId{2});
  const Evaluation e = evaluate_all(clients, parts.test, sim.ensemble);
  ASSERT_EQ(e.per_client.size(), 2u);
  EXPECT_NEAR(e.mean, (e.per_client[0].accuracy + e.per_client[1].accuracy) / 2, 1e-15);

  EventLog log;
  record_evaluation(log, 5, "hdus", e);
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log.records().back().metric, "mean_accuracy");
  EXPECT_EQ(log.records().back().client_id, -1);
}

TEST(Schedule, OrderedTicksAroundUnlearning) {
  const auto plain = build_schedule(3, std::nullopt);
  EXPECT_EQ(plain.size(), 9u);
  EXPECT_TRUE(std::is_sorted(plain.begin(), plain.end()));
  const auto ev = build_schedule(4, UnlearnSchedule{2, ClientId{1}});
  EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end()));
  const std::vector<SimEvent> tick3(ev.begin() + 6, ev.begin() + 8);
  EXPECT_EQ(tick3[0], (SimEvent{3, EventKind::kUnlearnRequest, 1}));
  EXPECT_EQ(tick3[1], (SimEvent{3, EventKind::kEvaluate, -1}));
  EXPECT_EQ(ev.back(), (SimEvent{5, EventKind::kEvaluate, -1}));
  EXPECT_EQ(std::count_if(ev.begin(), ev.end(),
                          [](const SimEvent& e) { return e.kind == EventKind::kTrainRound; }),
            4);
  EXPECT_THROW(build_schedule(4, UnlearnSchedule{5, ClientId{0}}), Error);
}

TEST(EventLog, CsvRoundTrip) {
  EventLog log;
  log.append(-1, 3, "hdus", "accuracy", 0.1 + 0.2);
  log.append(0, -1, "dsgd", "mean_accuracy", 1.0 / 3.0);
  log.append(7, -1, "fedunl", "unlearn_training_steps", 120);
  const std::string csv = log.to_csv("abc123");
  EXPECT_EQ(csv.rfind("# config_hash=abc123\nround,client_id,framework,metric,value\n", 0), 0u);
  EXPECT_EQ(EventLog::parse_csv(csv), log);
  EXPECT_THROW(EventLog::parse_csv("wrong,header\n"), Error);
}

TEST(FullRun, SameSeedSameLog) {
  auto run = [] {
    const auto parts = small_partition(3, 23);
    const auto sim = small_sim();
    const auto topo = Topology::complete(3);
    auto clients = init_network(parts, mixed_specs(3), topo, sim, 24);
    EventLog log;
    for (int r = 1; r <= 3; ++r) {
      run_round(clients, topo, sim, r);
      record_evaluation(log, r, "hdus", evaluate_all(clients, parts.test, sim.ensemble));
    }
    return log.to_csv();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace hdus
