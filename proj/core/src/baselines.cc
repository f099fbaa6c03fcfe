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

#include "hdus/baselines.h"

#include <algorithm>
#include <string>

#include "hdus/error.h"
#include "hdus/losses.h"
#include "hdus/training.h"

namespace hdus {

struct FedUnlLabelAccess {
  static const std::vector<int>& labels(const SealedLabels& sealed) {
    return sealed.labels_;
  }
};

namespace {

void require_homogeneous(const std::vector<ClientState>& clients,
                         const MlpSpec* expected, const char* framework) {
  const MlpSpec* first = expected;
  for (const auto& c : clients) {
    if (!c.active()) continue;
    if (first == nullptr) {
      first = &c.main.spec();
    } else if (!(c.main.spec() == *first)) {
      fail(ErrorCode::kConfig,
           std::string(framework) + " requires identical model structures; client " +
               to_string(c.id) + " has " + c.main.spec().to_string() + " vs " +
               first->to_string());
    }
  }
}

}  // namespace

void isgd_round(std::vector<ClientState>& clients, const SimConfig& cfg) {
  local_train_phase(clients, cfg);
}

void dsgd_average(std::vector<ClientState>& clients, const Topology& topology) {
  require_homogeneous(clients, nullptr, "DSGD");
  std::vector<std::vector<double>> snapshot(clients.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].active()) snapshot[i] = clients[i].main.flatten();
  }
  for (std::size_t i = 0; i < clients.size(); ++i) {
    ClientState& c = clients[i];
    if (!c.active()) continue;
    std::vector<std::size_t> group{i};
    for (int nb : topology.neighbors(c.id)) {
      const auto j = static_cast<std::size_t>(nb);
      if (j < clients.size() && clients[j].active()) group.push_back(j);
    }
    std::ranges::sort(group);
    std::vector<double> avg(snapshot[i].size(), 0.0);
    for (std::size_t j : group) {
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += snapshot[j][k];
    }
    const double inv = 1.0 / static_cast<double>(group.size());
    for (double& v : avg) v *= inv;
    c.main.assign(avg);
  }
}

void dsgd_round(std::vector<ClientState>& clients, const Topology& topology,
                const SimConfig& cfg) {
  local_train_phase(clients, cfg);
  dsgd_average(clients, topology);
}

RetrainSchedule dsgd_unlearn(std::vector<ClientState>& clients, ClientId quitting) {
  retire_client(clients, quitting);
  RetrainSchedule schedule;
  for (auto& c : clients) {
    if (!c.active()) continue;
    if (c.initial_main.layers().empty() || !(c.initial_main.spec() == c.main.spec())) {
      fail(ErrorCode::kState, "client " + to_string(c.id) + " has no stored initial state");
    }
    c.main = c.initial_main;
    schedule.retraining.push_back(c.id);
  }
  return schedule;
}

CentralServerState make_server(const MlpSpec& spec, Rng& rng) {
  CentralServerState server;
  server.global_model = init_mlp(spec, rng);
  server.initial_global = server.global_model;
  return server;
}

void fedunl_round(CentralServerState& server, std::vector<ClientState>& clients,
                  const SimConfig& cfg) {
  require_homogeneous(clients, &server.global_model.spec(), "FedUnl");
  const std::vector<double> global = server.global_model.flatten();
  std::vector<std::pair<ClientId, std::vector<double>>> deltas;
  for (auto& c : clients) {
    if (!c.active()) continue;
    c.main = server.global_model;
    train_supervised(c.main, c.local_data.features, c.local_data.labels, cfg.local,
                     c.train_rng);
    std::vector<double> delta = c.main.flatten();
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] -= global[k];
    deltas.emplace_back(c.id, std::move(delta));
  }
  ++server.round;
  server.round_members.emplace_back();
  if (deltas.empty()) return;
  const double weight = 1.0 / static_cast<double>(deltas.size());
  std::vector<double> next = global;
  for (auto& [id, delta] : deltas) {
    for (std::size_t k = 0; k < next.size(); ++k) next[k] += weight * delta[k];
    server.round_members.back().push_back(id);
    server.ledger.push_back({server.round, id, weight, std::move(delta)});
  }
  server.global_model.assign(next);
  for (auto& c : clients) {
    if (c.active()) c.main = server.global_model;
  }
}

void fedunl_subtract(CentralServerState& server, ClientId quitting) {
  for (std::size_t r = 0; r < server.round_members.size(); ++r) {
    const auto& members = server.round_members[r];
    if (std::ranges::find(members, quitting) == members.end()) continue;
    const int round = static_cast<int>(r) + 1;
    const bool logged = std::ranges::any_of(server.ledger, [&](const LedgerEntry& e) {
      return e.round == round && e.client == quitting;
    });
    if (!logged) {
      fail(ErrorCode::kState, "ledger has no update from client " + to_string(quitting) +
                                  " for round " + std::to_string(round));
    }
  }
  server.recovery_teacher = server.global_model;
  std::vector<double> global = server.global_model.flatten();
  for (const auto& e : server.ledger) {
    if (e.client != quitting) continue;
    for (std::size_t k = 0; k < global.size(); ++k) global[k] -= e.weight * e.delta[k];
  }
  std::erase_if(server.ledger, [&](const LedgerEntry& e) { return e.client == quitting; });
  for (auto& members : server.round_members) std::erase(members, quitting);
  server.global_model.assign(global);
}

void fedunl_remedy(CentralServerState& server, const ReferenceSet& ref,
                   const SealedLabels& sealed, const FedUnlRemedyConfig& cfg,
                   Rng& rng) {
  if (!server.recovery_teacher) {
    fail(ErrorCode::kState, "no recovery teacher; subtract an update first");
  }
  const auto& labels = FedUnlLabelAccess::labels(sealed);
  if (labels.size() != ref.size()) {
    fail(ErrorCode::kDimension, "reference labels do not match reference rows");
  }
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    fail(ErrorCode::kConfig, "fedunl alpha must be in [0, 1]");
  }
  const std::size_t classes = server.global_model.spec().output_dim();
  const Matrix teacher_soft =
      softmax_rows(mlp_forward(*server.recovery_teacher, ref.features), cfg.temperature);
  const std::vector<double> before = server.global_model.flatten();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for_each_minibatch(ref.size(), cfg.batch_size, rng, [&](std::span<const std::size_t> idx) {
      const Matrix x = select_rows(ref.features, idx);
      const Matrix soft = select_rows(teacher_soft, idx);
      std::vector<int> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[idx[i]];
      const Matrix onehot = one_hot(y, classes);
      auto kd = mlp_backward(server.global_model, x, DistillLoss{soft, cfg.temperature});
      auto ce = mlp_backward(server.global_model, x, CrossEntropyLoss{onehot});
      for (std::size_t l = 0; l < kd.grads.layers.size(); ++l) {
        auto gw = kd.grads.layers[l].weight.values();
        auto cw = ce.grads.layers[l].weight.values();
        for (std::size_t k = 0; k < gw.size(); ++k) {
          gw[k] = cfg.alpha * gw[k] + (1.0 - cfg.alpha) * cw[k];
        }
        auto& gb = kd.grads.layers[l].bias;
        const auto& cb = ce.grads.layers[l].bias;
        for (std::size_t k = 0; k < gb.size(); ++k) {
          gb[k] = cfg.alpha * gb[k] + (1.0 - cfg.alpha) * cb[k];
        }
      }
      sgd_step(server.global_model, kd.grads, cfg.lr);
    });
  }
  std::vector<double> delta = server.global_model.flatten();
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] -= before[k];
  server.ledger.push_back({server.round, kServerId, 1.0, std::move(delta)});
}

void fedunl_unlearn(CentralServerState& server, ClientId quitting,
                    const ReferenceSet& ref, const SealedLabels& labels,
                    const FedUnlRemedyConfig& cfg, Rng& rng) {
  fedunl_subtract(server, quitting);
  fedunl_remedy(server, ref, labels, cfg, rng);
}

std::vector<double> replay_ledger(const CentralServerState& server) {
  std::vector<double> flat = server.initial_global.flatten();
  for (const auto& e : server.ledger) {
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k] += e.weight * e.delta[k];
  }
  return flat;
}

void sisa_collect(CentralServerState& server, const std::vector<ClientState>& clients) {
  server.shard_models.clear();
  for (const auto& c : clients) {
    if (c.active()) server.shard_models.emplace_back(c.id, c.main);
  }
}

Matrix sisa_predict(const CentralServerState& server, const Matrix& batch) {
  if (server.shard_models.empty()) fail(ErrorCode::kState, "SISA-A ensemble is empty");
  Matrix sum;
  for (const auto& [id, model] : server.shard_models) {
    Matrix p = predict_proba(model, batch);
    if (sum.empty()) {
      sum = std::move(p);
    } else {
      auto acc = sum.values();
      auto src = p.values();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(server.shard_models.size());
  for (double& v : sum.values()) v *= inv;
  return sum;
}

void sisa_unlearn_client(CentralServerState& server, ClientId quitting) {
  auto it = std::ranges::find(server.shard_models, quitting,
                              &std::pair<ClientId, MlpModel>::first);
  if (it == server.shard_models.end()) {
    fail(ErrorCode::kNotFound, "no SISA-A shard for client " + to_string(quitting));
  }
  server.shard_models.erase(it);
}

}  // namespace hdus
