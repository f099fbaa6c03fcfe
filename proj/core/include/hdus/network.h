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

#ifndef HDUS_NETWORK_H_
#define HDUS_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hdus/datasets.h"
#include "hdus/distillation.h"
#include "hdus/event_log.h"
#include "hdus/mlp.h"
#include "hdus/rng.h"
#include "hdus/seed_repository.h"
#include "hdus/training.h"

namespace hdus {

enum class ClientStatus { kActive, kQuit };

struct ClientState {
  ClientId id;
  MlpModel main;
  // Parameters at initialization, kept for retrain-from-scratch baselines.
  MlpModel initial_main;
  std::optional<MlpModel> own_seed;
  RepositoryHandle repo;
  LabeledDataset local_data;
  std::shared_ptr<const ReferenceSet> ref;
  Rng train_rng;
  Rng incubate_rng;
  ClientStatus status = ClientStatus::kActive;

  bool active() const { return status == ClientStatus::kActive; }
};

// Symmetric neighbor sets without self-loops.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::vector<std::vector<int>> adjacency);

  static Topology complete(std::size_t clients);
  static Topology empty(std::size_t clients);

  std::size_t size() const { return adjacency_.size(); }
  // Ascending neighbor ids.
  const std::vector<int>& neighbors(ClientId id) const;
  bool connected(ClientId a, ClientId b) const;
  // Drops every edge touching `id`.
  Topology without(ClientId id) const;

 private:
  std::vector<std::vector<int>> adjacency_;
};

struct SimConfig {
  EnsembleConfig ensemble;
  SgdConfig local;
  DistillConfig distill;
  MlpSpec seed_spec;
  int incubate_every_rounds = 1;
  int exchange_every_rounds = 1;
  // Re-incubation continues from the client's previous seed instead of a
  // fresh initialization.
  bool warm_start_seeds = true;
  // Fraction of the shared reference each client distills on; 1 means every
  // client uses the identical reference features.
  double reference_fraction = 1.0;
  // Worker threads for the per-client train/incubate phase.
  int threads = 1;

  void validate() const;
};

// Called for every seed message on the wire, before delivery.
using MessageTap =
    std::function<void(ClientId from, ClientId to, std::span<const std::uint8_t> blob)>;

// One client per entry of `specs`. Every client gets independent init, train
// and incubation streams derived from (master_seed, client id).
std::vector<ClientState> init_network(const PartitionedDataset& partition,
                                      const std::vector<MlpSpec>& specs,
                                      const Topology& topology,
                                      const SimConfig& cfg,
                                      std::uint64_t master_seed);

// (a) local epochs on each active client's main model.
void local_train_phase(std::vector<ClientState>& clients, const SimConfig& cfg);

// (b) re-incubates each active client's seed from its main model.
void incubate_phase(std::vector<ClientState>& clients, const SimConfig& cfg);

// (c) serialized barrier: every active client's seed is encoded, sent to each
// active neighbor, decoded there, and stored remove-then-add. Senders are
// processed in ascending id order.
void exchange_seeds(std::vector<ClientState>& clients, const Topology& topology,
                    const MessageTap& tap = {});

// One synchronous protocol round (1-based `round`): train, incubate on the
// configured cadence, then exchange on the configured cadence.
void run_round(std::vector<ClientState>& clients, const Topology& topology,
               const SimConfig& cfg, int round, const MessageTap& tap = {});

struct UnlearnReceipt {
  std::size_t repositories_updated = 0;
  std::uint64_t training_steps = 0;
};

// Marks a client quit and drops its data and models, without touching anyone
// else. Throws kNotFound for unknown or already-quit ids.
void retire_client(std::vector<ClientState>& clients, ClientId quitting);

// Exact unlearning: retires the quitter and deletes its seed from every
// remaining repository. No model parameters change.
UnlearnReceipt handle_unlearn_request(std::vector<ClientState>& clients,
                                      ClientId quitting);

struct ClientAccuracy {
  ClientId id;
  double accuracy = 0.0;
};

struct Evaluation {
  std::vector<ClientAccuracy> per_client;
  double mean = 0.0;
};

// Ensemble accuracy of every active client on the shared test set.
Evaluation evaluate_all(const std::vector<ClientState>& clients,
                        const LabeledDataset& test, const EnsembleConfig& cfg);

void record_evaluation(EventLog& log, int round, std::string_view framework,
                       const Evaluation& eval);

ClientState& find_client(std::vector<ClientState>& clients, ClientId id);

enum class EventKind { kTrainRound = 0, kExchange = 1, kUnlearnRequest = 2, kEvaluate = 3 };

struct SimEvent {
  int time = 0;
  EventKind kind = EventKind::kTrainRound;
  int client_id = -1;

  friend auto operator<=>(const SimEvent&, const SimEvent&) = default;
};

struct UnlearnSchedule {
  // Training rounds completed before the request arrives.
  int after_round = 0;
  ClientId client;
};

// Ticks 1..after_round: train, exchange, evaluate. The next tick carries the
// unlearning request followed by an evaluation with no training. Remaining
// rounds follow. Without a schedule, ticks are 1..rounds. Events are sorted
// by (time, kind, client id).
std::vector<SimEvent> build_schedule(int rounds,
                                     const std::optional<UnlearnSchedule>& unlearn);

}  // namespace hdus

#endif  // HDUS_NETWORK_H_
