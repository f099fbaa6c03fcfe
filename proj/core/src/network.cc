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

#include "hdus/network.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "hdus/error.h"
#include "hdus/losses.h"
#include "hdus/seed_codec.h"

namespace hdus {

namespace {

// Runs fn on every active client. With threads > 1 clients are spread over
// workers; each touches only its own state, so results match the sequential
// order. The first failure in client-id order is rethrown with its id.
void for_each_active(std::vector<ClientState>& clients, int threads,
                     const std::function<void(ClientState&)>& fn) {
  std::vector<std::exception_ptr> errors(clients.size());
  auto run_one = [&](std::size_t i) {
    if (!clients[i].active()) return;
    try {
      fn(clients[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || clients.size() <= 1) {
    for (std::size_t i = 0; i < clients.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), clients.size());
    for (std::size_t w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < clients.size(); i = next++) run_one(i);
      });
    }
  }
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "client " + to_string(clients[i].id) + ": " + e.detail());
    }
  }
}

}  // namespace

Topology::Topology(std::vector<std::vector<int>> adjacency)
    : adjacency_(std::move(adjacency)) {
  const int n = static_cast<int>(adjacency_.size());
  for (int i = 0; i < n; ++i) {
    auto& row = adjacency_[static_cast<std::size_t>(i)];
    std::ranges::sort(row);
    if (std::ranges::adjacent_find(row) != row.end()) {
      fail(ErrorCode::kValidation, "duplicate neighbor of client " + std::to_string(i));
    }
    for (int j : row) {
      if (j == i) fail(ErrorCode::kValidation, "self-loop at client " + std::to_string(i));
      if (j < 0 || j >= n) {
        fail(ErrorCode::kValidation, "neighbor id " + std::to_string(j) + " out of range");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j : adjacency_[static_cast<std::size_t>(i)]) {
      if (!std::ranges::binary_search(adjacency_[static_cast<std::size_t>(j)], i)) {
        fail(ErrorCode::kValidation, "edge " + std::to_string(i) + "-" +
                                         std::to_string(j) + " is not symmetric");
      }
    }
  }
}

Topology Topology::complete(std::size_t clients) {
  std::vector<std::vector<int>> adj(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    for (std::size_t j = 0; j < clients; ++j) {
      if (i != j) adj[i].push_back(static_cast<int>(j));
    }
  }
  return Topology(std::move(adj));
}

Topology Topology::empty(std::size_t clients) {
  return Topology(std::vector<std::vector<int>>(clients));
}

const std::vector<int>& Topology::neighbors(ClientId id) const {
  if (id.value < 0 || static_cast<std::size_t>(id.value) >= adjacency_.size()) {
    fail(ErrorCode::kNotFound, "client " + to_string(id) + " not in topology");
  }
  return adjacency_[static_cast<std::size_t>(id.value)];
}

bool Topology::connected(ClientId a, ClientId b) const {
  return std::ranges::binary_search(neighbors(a), b.value);
}

Topology Topology::without(ClientId id) const {
  auto adj = adjacency_;
  for (std::size_t i = 0; i < adj.size(); ++i) {
    if (static_cast<int>(i) == id.value) {
      adj[i].clear();
    } else {
      std::erase(adj[i], id.value);
    }
  }
  return Topology(std::move(adj));
}

void SimConfig::validate() const {
  ensemble.validate();
  distill.validate();
  if (local.epochs < 0) fail(ErrorCode::kConfig, "local_epochs must be >= 0");
  if (!(local.lr >= 0.0)) fail(ErrorCode::kConfig, "lr must be >= 0");
  if (local.batch_size < 1) fail(ErrorCode::kConfig, "batch_size must be >= 1");
  if (incubate_every_rounds < 1) fail(ErrorCode::kConfig, "incubate_every_rounds must be >= 1");
  if (exchange_every_rounds < 1) fail(ErrorCode::kConfig, "exchange_every_rounds must be >= 1");
  if (!(reference_fraction > 0.0 && reference_fraction <= 1.0)) {
    fail(ErrorCode::kConfig, "reference_fraction must be in (0, 1]");
  }
  seed_spec.validate();
}

std::vector<ClientState> init_network(const PartitionedDataset& partition,
                                      const std::vector<MlpSpec>& specs,
                                      const Topology& topology,
                                      const SimConfig& cfg,
                                      std::uint64_t master_seed) {
  cfg.validate();
  const std::size_t n = partition.client_count();
  if (specs.size() != n) {
    fail(ErrorCode::kConfig, std::to_string(specs.size()) + " model specs for " +
                                 std::to_string(n) + " client splits");
  }
  if (topology.size() != n) {
    fail(ErrorCode::kConfig, "topology has " + std::to_string(topology.size()) +
                                 " clients, partition has " + std::to_string(n));
  }
  const std::size_t features = partition.reference.features.cols();
  const std::size_t classes = partition.test.class_count;
  auto shared_ref = std::make_shared<const ReferenceSet>(partition.reference);

  std::vector<ClientState> clients;
  clients.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = specs[i];
    spec.validate();
    if (spec.input_dim() != features || spec.output_dim() != classes) {
      fail(ErrorCode::kConfig, "client " + std::to_string(i) + " spec " +
                                   spec.to_string() + " does not match F=" +
                                   std::to_string(features) + " C=" +
                                   std::to_string(classes));
    }
    const ClientId id{static_cast<int>(i)};
    Rng init_rng = Rng::derive(master_seed, StreamPurpose::kInit, i);
    ClientState c;
    c.id = id;
    c.main = init_mlp(spec, init_rng);
    c.initial_main = c.main;
    c.repo = RepositoryHandle(SeedRepository(id, features, classes));
    c.local_data = partition.client_splits[i];
    c.train_rng = Rng::derive(master_seed, StreamPurpose::kTrain, i);
    c.incubate_rng = Rng::derive(master_seed, StreamPurpose::kIncubate, i);
    if (cfg.reference_fraction < 1.0) {
      Rng ref_rng = Rng::derive(master_seed, StreamPurpose::kReference, i);
      const std::size_t total = shared_ref->size();
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(cfg.reference_fraction * static_cast<double>(total))));
      auto order = ref_rng.permutation(total);
      order.resize(keep);
      std::ranges::sort(order);
      ReferenceSet own;
      own.features = select_rows(shared_ref->features, order);
      for (std::size_t r : order) own.row_ids.push_back(shared_ref->row_ids[r]);
      c.ref = std::make_shared<const ReferenceSet>(std::move(own));
    } else {
      c.ref = shared_ref;
    }
    clients.push_back(std::move(c));
  }
  return clients;
}

void local_train_phase(std::vector<ClientState>& clients, const SimConfig& cfg) {
  for_each_active(clients, cfg.threads, [&](ClientState& c) {
    train_supervised(c.main, c.local_data.features, c.local_data.labels, cfg.local,
                     c.train_rng);
  });
}

void incubate_phase(std::vector<ClientState>& clients, const SimConfig& cfg) {
  for_each_active(clients, cfg.threads, [&](ClientState& c) {
    if (cfg.warm_start_seeds && c.own_seed && c.own_seed->spec() == cfg.seed_spec) {
      c.own_seed = distill_student(std::move(*c.own_seed), c.main, *c.ref, cfg.distill,
                                   c.incubate_rng);
    } else {
      c.own_seed = incubate_seed(c.main, cfg.seed_spec, *c.ref, cfg.distill,
                                 c.incubate_rng);
    }
  });
}

void exchange_seeds(std::vector<ClientState>& clients, const Topology& topology,
                    const MessageTap& tap) {
  for (const auto& sender : clients) {
    if (!sender.active() || !sender.own_seed) continue;
    const std::vector<std::uint8_t> blob = encode_seed(*sender.own_seed);
    for (int nb : topology.neighbors(sender.id)) {
      ClientState& receiver = find_client(clients, ClientId{nb});
      if (!receiver.active()) continue;
      if (tap) tap(sender.id, receiver.id, blob);
      MlpModel received = decode_seed(blob);
      SeedRepository repo = *receiver.repo.snapshot();
      if (repo.contains(sender.id)) repo = unlearn_neighbor(std::move(repo), sender.id);
      receiver.repo.publish(add_neighbor_seed(std::move(repo), sender.id, std::move(received)));
    }
  }
}

void run_round(std::vector<ClientState>& clients, const Topology& topology,
               const SimConfig& cfg, int round, const MessageTap& tap) {
  if (std::ranges::none_of(clients, &ClientState::active)) {
    fail(ErrorCode::kState, "no active clients");
  }
  local_train_phase(clients, cfg);
  if (round % cfg.incubate_every_rounds == 0) incubate_phase(clients, cfg);
  if (round % cfg.exchange_every_rounds == 0) exchange_seeds(clients, topology, tap);
}

ClientState& find_client(std::vector<ClientState>& clients, ClientId id) {
  auto it = std::ranges::find(clients, id, &ClientState::id);
  if (it == clients.end()) fail(ErrorCode::kNotFound, "unknown client " + to_string(id));
  return *it;
}

void retire_client(std::vector<ClientState>& clients, ClientId quitting) {
  ClientState& q = find_client(clients, quitting);
  if (!q.active()) {
    fail(ErrorCode::kNotFound, "client " + to_string(quitting) + " has already quit");
  }
  q.status = ClientStatus::kQuit;
  q.main = MlpModel();
  q.initial_main = MlpModel();
  q.own_seed.reset();
  q.local_data = LabeledDataset();
  q.ref.reset();
  q.repo.publish(SeedRepository());
}

UnlearnReceipt handle_unlearn_request(std::vector<ClientState>& clients,
                                      ClientId quitting) {
  const std::uint64_t steps_before = training_step_count();
  retire_client(clients, quitting);
  UnlearnReceipt receipt;
  for (auto& c : clients) {
    if (!c.active()) continue;
    auto snap = c.repo.snapshot();
    if (!snap->contains(quitting)) continue;
    c.repo.publish(unlearn_neighbor(*snap, quitting));
    ++receipt.repositories_updated;
  }
  receipt.training_steps = training_step_count() - steps_before;
  return receipt;
}

Evaluation evaluate_all(const std::vector<ClientState>& clients,
                        const LabeledDataset& test, const EnsembleConfig& cfg) {
  if (test.size() == 0) fail(ErrorCode::kDomain, "empty test set");
  Evaluation eval;
  for (const auto& c : clients) {
    if (!c.active()) continue;
    auto repo = c.repo.snapshot();
    const Matrix probs = ensemble_predict(c.main, *repo, cfg, test.features);
    eval.per_client.push_back({c.id, accuracy(probs, test.labels)});
  }
  if (!eval.per_client.empty()) {
    double sum = 0.0;
    for (const auto& pc : eval.per_client) sum += pc.accuracy;
    eval.mean = sum / static_cast<double>(eval.per_client.size());
  }
  return eval;
}

void record_evaluation(EventLog& log, int round, std::string_view framework,
                       const Evaluation& eval) {
  for (const auto& pc : eval.per_client) {
    log.append(round, pc.id.value, framework, "accuracy", pc.accuracy);
  }
  log.append(round, -1, framework, "mean_accuracy", eval.mean);
}

std::vector<SimEvent> build_schedule(int rounds,
                                     const std::optional<UnlearnSchedule>& unlearn) {
  if (rounds < 0) fail(ErrorCode::kConfig, "rounds must be >= 0");
  std::vector<SimEvent> events;
  auto add_round = [&](int tick) {
    events.push_back({tick, EventKind::kTrainRound, -1});
    events.push_back({tick, EventKind::kExchange, -1});
    events.push_back({tick, EventKind::kEvaluate, -1});
  };
  if (!unlearn) {
    for (int t = 1; t <= rounds; ++t) add_round(t);
  } else {
    if (unlearn->after_round < 1 || unlearn->after_round > rounds) {
      fail(ErrorCode::kConfig, "unlearning must follow a round in [1, " +
                                   std::to_string(rounds) + "]");
    }
    for (int t = 1; t <= unlearn->after_round; ++t) add_round(t);
    const int request_tick = unlearn->after_round + 1;
    events.push_back({request_tick, EventKind::kUnlearnRequest, unlearn->client.value});
    events.push_back({request_tick, EventKind::kEvaluate, -1});
    for (int t = request_tick + 1; t <= rounds + 1; ++t) add_round(t);
  }
  std::ranges::sort(events);
  return events;
}

}  // namespace hdus
