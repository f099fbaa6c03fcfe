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

#include "hdus/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hdus/baselines.h"
#include "hdus/error.h"
#include "hdus/losses.h"
#include "hdus/network.h"

namespace hdus {

namespace {

constexpr std::string_view kHdus = "hdus";
constexpr std::string_view kIsgd = "isgd";
constexpr std::string_view kDsgd = "dsgd";
constexpr std::string_view kFedUnl = "fedunl";
constexpr std::string_view kSisa = "sisa_a";

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
  for (int b = 0; b < 8; ++b) {
    h ^= (word >> (8 * b)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t class_count(const ExperimentConfig& cfg) {
  return cfg.dataset == DatasetKind::kBlobs ? cfg.blob_classes : 10;
}

std::optional<UnlearnSchedule> unlearn_schedule(const ExperimentConfig& cfg) {
  if (cfg.unlearn_round <= 0) return std::nullopt;
  return UnlearnSchedule{cfg.unlearn_round, ClientId{cfg.unlearn_client}};
}

double server_accuracy(const Matrix& probs, const LabeledDataset& test) {
  return accuracy(probs, test.labels);
}

// Per-framework behavior at each scheduled event.
struct Driver {
  virtual ~Driver() = default;
  virtual void train(int round) = 0;
  virtual void exchange(int round) = 0;
  virtual void unlearn(ClientId quitting) = 0;
  virtual void evaluate(EventLog& log, int t) = 0;
};

struct PeerDriver : Driver {
  std::string name;
  std::vector<ClientState> clients;
  Topology topology;
  SimConfig sim;
  const LabeledDataset* test = nullptr;

  void evaluate(EventLog& log, int t) override {
    record_evaluation(log, t, name, evaluate_all(clients, *test, sim.ensemble));
  }
};

struct HdusDriver : PeerDriver {
  void train(int round) override {
    local_train_phase(clients, sim);
    if (round % sim.incubate_every_rounds == 0) incubate_phase(clients, sim);
  }
  void exchange(int round) override {
    if (round % sim.exchange_every_rounds == 0) exchange_seeds(clients, topology);
  }
  void unlearn(ClientId q) override { handle_unlearn_request(clients, q); }
};

struct IsgdDriver : PeerDriver {
  void train(int) override { isgd_round(clients, sim); }
  void exchange(int) override {}
  void unlearn(ClientId q) override { retire_client(clients, q); }
};

struct DsgdDriver : PeerDriver {
  void train(int) override { local_train_phase(clients, sim); }
  void exchange(int) override { dsgd_average(clients, topology); }
  void unlearn(ClientId q) override { dsgd_unlearn(clients, q); }
};

struct ServerDriver : Driver {
  std::string name;
  std::vector<ClientState> clients;
  SimConfig sim;
  CentralServerState server;
  const PartitionedDataset* parts = nullptr;

  void evaluate(EventLog& log, int t) override {
    log.append(t, -1, name, "mean_accuracy", server_accuracy(predict(), parts->test));
  }
  virtual Matrix predict() const = 0;
};

struct FedUnlDriver : ServerDriver {
  FedUnlRemedyConfig remedy;
  Rng remedy_rng;
  bool unlearned = false;

  void train(int) override {
    fedunl_round(server, clients, sim);
    if (unlearned) {
      fedunl_remedy(server, parts->reference, parts->reference_labels, remedy, remedy_rng);
    }
  }
  void exchange(int) override {}
  void unlearn(ClientId q) override {
    retire_client(clients, q);
    fedunl_subtract(server, q);
    unlearned = true;
  }
  Matrix predict() const override {
    return predict_proba(server.global_model, parts->test.features);
  }
};

struct SisaDriver : ServerDriver {
  void train(int) override { isgd_round(clients, sim); }
  void exchange(int) override { sisa_collect(server, clients); }
  void unlearn(ClientId q) override {
    retire_client(clients, q);
    sisa_unlearn_client(server, q);
  }
  Matrix predict() const override { return sisa_predict(server, parts->test.features); }
};

std::unique_ptr<Driver> make_driver(const ExperimentConfig& cfg, std::string_view fw,
                                    const PartitionedDataset& parts, std::uint64_t seed) {
  const std::size_t features = parts.test.feature_dim();
  const SimConfig sim = sim_config(cfg, features);
  const auto specs = framework_specs(cfg, fw, features);
  const Topology topology = Topology::complete(cfg.n_clients);
  auto peer = [&](auto driver) -> std::unique_ptr<Driver> {
    driver->name = std::string(fw);
    driver->clients = init_network(parts, specs, topology, sim, seed);
    driver->topology = topology;
    driver->sim = sim;
    driver->test = &parts.test;
    return driver;
  };
  auto central = [&](auto driver) -> std::unique_ptr<Driver> {
    driver->name = std::string(fw);
    driver->clients = init_network(parts, specs, topology, sim, seed);
    driver->sim = sim;
    Rng server_rng = Rng::derive(seed, StreamPurpose::kServer, 0);
    driver->server = make_server(specs.front(), server_rng);
    driver->parts = &parts;
    return driver;
  };
  if (fw == kHdus) return peer(std::make_unique<HdusDriver>());
  if (fw == kIsgd) return peer(std::make_unique<IsgdDriver>());
  if (fw == kDsgd) return peer(std::make_unique<DsgdDriver>());
  if (fw == kSisa) return central(std::make_unique<SisaDriver>());
  if (fw == kFedUnl) {
    auto d = std::make_unique<FedUnlDriver>();
    d->remedy = {cfg.fedunl_alpha, cfg.temperature, cfg.fedunl_lr, cfg.batch_size,
                 cfg.fedunl_remedy_epochs};
    d->remedy_rng = Rng::derive(seed, StreamPurpose::kServer, 1);
    return central(std::move(d));
  }
  fail(ErrorCode::kConfig, "unknown framework '" + std::string(fw) + "'");
}

double final_mean_accuracy(const EventLog& log) {
  for (auto it = log.records().rbegin(); it != log.records().rend(); ++it) {
    if (it->metric == "mean_accuracy") return it->value;
  }
  fail(ErrorCode::kState, "run produced no evaluation");
}

}  // namespace

SimConfig sim_config(const ExperimentConfig& cfg, std::size_t features) {
  SimConfig sim;
  sim.ensemble = {cfg.lambda, cfg.ensemble_combine};
  sim.local = {cfg.local_epochs, cfg.lr, cfg.batch_size};
  sim.distill = {cfg.temperature, cfg.incubate_epochs, cfg.incubate_lr, cfg.batch_size};
  sim.seed_spec = tier_spec(cfg.seed_tier, features, class_count(cfg));
  sim.warm_start_seeds = cfg.incubate_warm_start;
  sim.incubate_every_rounds = cfg.incubate_every_rounds;
  sim.exchange_every_rounds = cfg.exchange_every_rounds;
  sim.reference_fraction = cfg.reference_fraction;
  sim.threads = cfg.threads;
  return sim;
}

// Heterogeneous: HDUS and ISGD keep per-client tiers, the single-architecture
// baselines get the smallest tier. Homogeneous: large everywhere.
std::vector<MlpSpec> framework_specs(const ExperimentConfig& cfg, std::string_view fw,
                                     std::size_t features) {
  const std::size_t classes = class_count(cfg);
  std::vector<MlpSpec> specs;
  if (fw == kHdus || fw == kIsgd) {
    for (ModelTier t : cfg.client_tiers()) specs.push_back(tier_spec(t, features, classes));
  } else {
    const ModelTier t = cfg.setting == Setting::kHomogeneous ? ModelTier::kLarge
                                                             : ModelTier::kSmall;
    specs.assign(cfg.n_clients, tier_spec(t, features, classes));
  }
  return specs;
}

PartitionedDataset build_partition(const ExperimentConfig& cfg, std::uint64_t seed) {
  LabeledDataset data;
  if (cfg.dataset == DatasetKind::kBlobs) {
    // Enough rows that pool / N >= samples_per_client after carving the
    // reference and the test fraction.
    const double pool = static_cast<double>(cfg.n_clients * cfg.samples_per_client);
    const double total =
        static_cast<double>(cfg.ref_size) + std::ceil(pool / (1.0 - cfg.test_fraction));
    BlobParams params;
    params.classes = cfg.blob_classes;
    params.features = cfg.blob_features;
    params.spread = cfg.blob_spread;
    params.modes_per_class = cfg.blob_modes;
    params.n_per_class =
        static_cast<std::size_t>(std::ceil(total / static_cast<double>(cfg.blob_classes)));
    Rng data_rng = Rng::derive(seed, StreamPurpose::kData);
    data = gen_blobs(params, data_rng);
  } else {
    data = load_idx_directory(cfg.data_dir);
  }
  Rng part_rng = Rng::derive(seed, StreamPurpose::kPartition);
  if (cfg.reference_source == ReferenceSource::kHeldOut) {
    return partition_noniid(data, cfg.n_clients, cfg.ref_size, cfg.test_fraction, part_rng);
  }
  PartitionedDataset parts =
      partition_noniid(data, cfg.n_clients, 0, cfg.test_fraction, part_rng);
  // Simulated reference: fresh blobs in the same feature space, unrelated to
  // the client data.
  BlobParams params;
  params.classes = data.class_count;
  params.features = data.feature_dim();
  params.spread = cfg.blob_spread;
  params.modes_per_class = cfg.blob_modes;
  params.n_per_class = cfg.ref_size / params.classes + 1;
  Rng ref_rng = Rng::derive(seed, StreamPurpose::kReference);
  const LabeledDataset generated = gen_blobs(params, ref_rng);
  Rng split_rng = Rng::derive(seed, StreamPurpose::kReference, 1);
  ReferenceSplit split =
      split_reference(generated, cfg.ref_size, split_rng);
  parts.reference = std::move(split.reference);
  parts.reference_labels = std::move(split.sealed_labels);
  return parts;
}

std::string partition_fingerprint(const PartitionedDataset& parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_rows = [&](std::uint64_t tag, const std::vector<std::size_t>& rows) {
    h = fnv1a(h, tag);
    h = fnv1a(h, rows.size());
    for (std::size_t r : rows) h = fnv1a(h, r);
  };
  mix_rows(0, parts.reference.row_ids);
  mix_rows(1, parts.test.row_ids);
  for (std::size_t i = 0; i < parts.client_splits.size(); ++i) {
    mix_rows(2 + i, parts.client_splits[i].row_ids);
  }
  return hex16(h);
}

EventLog run_framework(const ExperimentConfig& cfg, std::string_view framework,
                       const PartitionedDataset& parts, std::uint64_t seed) {
  auto driver = make_driver(cfg, framework, parts, seed);
  const auto unlearn = unlearn_schedule(cfg);
  const int offset = unlearn ? unlearn->after_round + 1 : 0;
  EventLog log;
  int round = 0;
  for (const SimEvent& ev : build_schedule(cfg.rounds, unlearn)) {
    const int t = ev.time - offset;
    switch (ev.kind) {
      case EventKind::kTrainRound:
        ++round;
        driver->train(round);
        break;
      case EventKind::kExchange:
        driver->exchange(round);
        break;
      case EventKind::kUnlearnRequest: {
        const std::uint64_t before = training_step_count();
        driver->unlearn(ClientId{ev.client_id});
        log.append(t, ev.client_id, framework, "unlearn_training_steps",
                   static_cast<double>(training_step_count() - before));
        break;
      }
      case EventKind::kEvaluate:
        driver->evaluate(log, t);
        break;
    }
  }
  return log;
}

const FrameworkSummary& RunReport::summary(std::string_view framework) const {
  for (const auto& s : summaries) {
    if (s.framework == framework) return s;
  }
  fail(ErrorCode::kNotFound, "no summary for framework '" + std::string(framework) + "'");
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.config = cfg;
  report.config_hash = config_hash(cfg);
  const auto frameworks = cfg.frameworks();
  for (int r = 0; r < cfg.repeats; ++r) {
    RepeatResult rep;
    rep.repeat = r;
    rep.seed = cfg.master_seed + static_cast<std::uint64_t>(r);
    PartitionedDataset parts;
    try {
      parts = build_partition(cfg, rep.seed);
    } catch (const Error& e) {
      fail(e.code(), "repeat " + std::to_string(r) + ", data: " + e.detail());
    }
    rep.partition_fingerprint = partition_fingerprint(parts);
    for (const auto& fw : frameworks) {
      try {
        EventLog log = run_framework(cfg, fw, parts, rep.seed);
        rep.final_accuracy.emplace_back(fw, final_mean_accuracy(log));
        rep.log.append_all(log);
      } catch (const Error& e) {
        fail(e.code(), "repeat " + std::to_string(r) + ", " + fw + ": " + e.detail());
      }
      if (partition_fingerprint(parts) != rep.partition_fingerprint) {
        fail(ErrorCode::kState, fw + " modified the shared partition");
      }
    }
    report.repeats.push_back(std::move(rep));
  }
  for (std::size_t f = 0; f < frameworks.size(); ++f) {
    FrameworkSummary s;
    s.framework = frameworks[f];
    for (const auto& rep : report.repeats) s.per_repeat.push_back(rep.final_accuracy[f].second);
    const double n = static_cast<double>(s.per_repeat.size());
    double sum = 0.0;
    for (double v : s.per_repeat) sum += v;
    s.mean = sum / n;
    if (s.per_repeat.size() > 1) {
      double ss = 0.0;
      for (double v : s.per_repeat) ss += (v - s.mean) * (v - s.mean);
      s.std = std::sqrt(ss / (n - 1.0));
    }
    report.summaries.push_back(std::move(s));
  }
  return report;
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "lambda") return SweepParam::kLambda;
  if (name == "temperature") return SweepParam::kTemperature;
  fail(ErrorCode::kConfig, "sweep parameter must be lambda or temperature, got '" +
                               std::string(name) + "'");
}

std::string_view sweep_param_name(SweepParam param) {
  return param == SweepParam::kLambda ? "lambda" : "temperature";
}

SweepResult sweep(const ExperimentConfig& cfg, SweepParam param,
                  const std::vector<double>& values) {
  SweepResult result;
  result.param = param;
  result.base = cfg;
  for (double v : values) {
    SweepCell cell;
    cell.value = v;
    ExperimentConfig c = cfg;
    (param == SweepParam::kLambda ? c.lambda : c.temperature) = v;
    try {
      cell.report = run_experiment(c);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

ExperimentConfig unlearn_demo_config(ExperimentConfig cfg) {
  if (cfg.unlearn_round == 0) cfg.unlearn_round = std::max(1, cfg.rounds / 2);
  return cfg;
}

}  // namespace hdus
