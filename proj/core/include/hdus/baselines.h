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

#ifndef HDUS_BASELINES_H_
#define HDUS_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hdus/datasets.h"
#include "hdus/mlp.h"
#include "hdus/network.h"
#include "hdus/rng.h"

namespace hdus {

// ---- ISGD: isolated local training, no communication. ----

void isgd_round(std::vector<ClientState>& clients, const SimConfig& cfg);

// ---- DSGD: local SGD followed by synchronous gossip averaging. ----

// Each active client's parameters become the uniform average of itself and
// its active neighbors, computed from a pre-averaging snapshot. Throws
// kConfig if active clients have different specs.
void dsgd_average(std::vector<ClientState>& clients, const Topology& topology);

void dsgd_round(std::vector<ClientState>& clients, const Topology& topology,
                const SimConfig& cfg);

struct RetrainSchedule {
  std::vector<ClientId> retraining;
};

// Retires the quitter and resets every remaining client to its stored
// initial parameters; they must then retrain from scratch.
RetrainSchedule dsgd_unlearn(std::vector<ClientState>& clients, ClientId quitting);

// ---- Central server shared by FedUnl and SISA-A. ----

inline constexpr ClientId kServerId{-1};

struct LedgerEntry {
  int round = 0;
  ClientId client;  // kServerId for server-side corrections
  double weight = 0.0;
  std::vector<double> delta;
};

struct CentralServerState {
  MlpModel global_model;
  MlpModel initial_global;
  // Applied updates; the global equals initial + sum(weight * delta).
  std::vector<LedgerEntry> ledger;
  // Clients whose deltas entered each aggregation round (index = round - 1).
  std::vector<std::vector<ClientId>> round_members;
  int round = 0;
  // Pre-subtraction global kept as the distillation teacher after unlearning.
  std::optional<MlpModel> recovery_teacher;
  // SISA-A: one model per shard owner, ascending client id.
  std::vector<std::pair<ClientId, MlpModel>> shard_models;
};

CentralServerState make_server(const MlpSpec& spec, Rng& rng);

// ---- FedUnl: FedAvg with a per-round update ledger. ----

// Every active client copies the global, trains locally, and reports its
// delta; the global moves by the mean delta. Throws kConfig if any active
// client's spec differs from the global.
void fedunl_round(CentralServerState& server, std::vector<ClientState>& clients,
                  const SimConfig& cfg);

struct FedUnlRemedyConfig {
  // Loss = alpha * T^2 KL(teacher || student) + (1 - alpha) * CE(labels).
  double alpha = 0.5;
  double temperature = 3.0;
  double lr = 0.05;
  std::size_t batch_size = 32;
  int epochs = 1;
};

// global -= sum over rounds of weight * delta_quitting, removing those
// entries from the ledger and remembering the old global as the teacher.
// Throws kState if a round the quitter took part in has no ledger entry.
void fedunl_subtract(CentralServerState& server, ClientId quitting);

// One or more epochs of server-side distillation from the recovery teacher on
// the labeled reference set; the net change is appended to the ledger.
void fedunl_remedy(CentralServerState& server, const ReferenceSet& ref,
                   const SealedLabels& labels, const FedUnlRemedyConfig& cfg,
                   Rng& rng);

// Subtraction followed by remedy distillation.
void fedunl_unlearn(CentralServerState& server, ClientId quitting,
                    const ReferenceSet& ref, const SealedLabels& labels,
                    const FedUnlRemedyConfig& cfg, Rng& rng);

// initial_global + sum(weight * delta) over the ledger, flattened.
std::vector<double> replay_ledger(const CentralServerState& server);

// ---- SISA-A: ensemble of per-client shard models at the server. ----

// Copies every active client's model into the server's shard list.
void sisa_collect(CentralServerState& server, const std::vector<ClientState>& clients);

// Uniform mean of shard-model probabilities.
Matrix sisa_predict(const CentralServerState& server, const Matrix& batch);

// Drops the shard. Throws kNotFound for unknown ids.
void sisa_unlearn_client(CentralServerState& server, ClientId quitting);

}  // namespace hdus

#endif  // HDUS_BASELINES_H_
