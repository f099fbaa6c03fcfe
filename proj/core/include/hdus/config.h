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

#ifndef HDUS_CONFIG_H_
#define HDUS_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hdus/mlp.h"
#include "hdus/seed_repository.h"

namespace hdus {

enum class DatasetKind { kBlobs, kMnist, kFmnist };
enum class Setting { kHomogeneous, kHeterogeneous };
// Where reference rows come from: carved from the dataset, or generated blobs.
enum class ReferenceSource { kHeldOut, kSynthetic };

inline constexpr int kConfigSchemaVersion = 1;

// Every knob of an experiment. Defaults are the desk-scale profile: ten-class
// 20-dim blobs, five clients with 600 samples each, 1,000 reference rows,
// 30 rounds, lambda 0.3, T 3.
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;

  DatasetKind dataset = DatasetKind::kBlobs;
  std::string data_dir;
  std::size_t blob_classes = 10;
  std::size_t blob_features = 20;
  double blob_spread = 0.35;
  std::size_t blob_modes = 16;
  std::size_t samples_per_client = 600;
  std::size_t ref_size = 1000;
  double test_fraction = 0.2;
  ReferenceSource reference_source = ReferenceSource::kHeldOut;
  double reference_fraction = 1.0;

  // "hdus", "isgd", "dsgd", "fedunl", "sisa_a", or "all".
  std::string framework = "all";
  std::size_t n_clients = 5;
  Setting setting = Setting::kHeterogeneous;
  // Optional explicit per-client tiers; empty means the default allocation.
  std::vector<ModelTier> tiers;
  ModelTier seed_tier = ModelTier::kSmall;

  double lambda = 0.3;
  double temperature = 3.0;
  EnsembleCombine ensemble_combine = EnsembleCombine::kProbabilities;

  int local_epochs = 1;
  double lr = 0.05;
  std::size_t batch_size = 32;
  int incubate_epochs = 5;
  double incubate_lr = 0.05;
  bool incubate_warm_start = true;
  int incubate_every_rounds = 1;
  int exchange_every_rounds = 1;

  double fedunl_alpha = 0.5;
  int fedunl_remedy_epochs = 1;
  double fedunl_lr = 0.05;

  int rounds = 30;
  // Training rounds before the unlearning request; 0 disables unlearning.
  int unlearn_round = 0;
  int unlearn_client = 0;

  int repeats = 5;
  std::uint64_t master_seed = 42;
  std::string output_path = "hdus_out";
  int threads = 1;

  // Throws kConfig naming the offending key.
  void validate() const;
  std::vector<std::string> frameworks() const;
  // Per-client tiers for frameworks that support heterogeneous models.
  std::vector<ModelTier> client_tiers() const;
};

// Applies one `key = value` setting. Throws kConfig for unknown keys or
// malformed values.
void set_config_value(ExperimentConfig& cfg, std::string_view key,
                      std::string_view value);

// Parses the `key = value` config text ('#' starts a comment). Unknown and
// duplicate keys are errors; `source` names the file in messages. The result
// is validated unless `validate` is false (callers layering overrides on top
// validate afterwards).
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>",
                              bool validate = true);
ExperimentConfig load_config(const std::filesystem::path& path, bool validate = true);

// Canonical `key = value` text of every field in schema order. Parsing it
// yields an equal config.
std::string config_snapshot(const ExperimentConfig& cfg);

// 16 hex digits of FNV-1a 64 over config_snapshot.
std::string config_hash(const ExperimentConfig& cfg);

struct ConfigKeyInfo {
  std::string_view key;
  std::string_view help;
};

const std::vector<ConfigKeyInfo>& config_keys();

std::string_view dataset_name(DatasetKind kind);
std::string_view setting_name(Setting setting);

}  // namespace hdus

#endif  // HDUS_CONFIG_H_
