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

#ifndef HDUS_EXPERIMENT_H_
#define HDUS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdus/config.h"
#include "hdus/datasets.h"
#include "hdus/event_log.h"
#include "hdus/mlp.h"
#include "hdus/network.h"

namespace hdus {

// Builds the shared data partition of one repeat. Blob data is sized so each
// client gets at least samples_per_client rows; IDX data is read from
// cfg.data_dir.
// Simulator settings derived from an experiment config for F-dim features.
SimConfig sim_config(const ExperimentConfig& cfg, std::size_t features);

// Per-client model specs a framework runs with under cfg.setting.
std::vector<MlpSpec> framework_specs(const ExperimentConfig& cfg, std::string_view framework,
                                     std::size_t features);

PartitionedDataset build_partition(const ExperimentConfig& cfg, std::uint64_t seed);

// 16 hex digits identifying which rows landed in which split.
std::string partition_fingerprint(const PartitionedDataset& parts);

struct RepeatResult {
  int repeat = 0;
  std::uint64_t seed = 0;
  std::string partition_fingerprint;
  // Final mean test accuracy per framework, in cfg.frameworks() order.
  std::vector<std::pair<std::string, double>> final_accuracy;
  EventLog log;
};

struct FrameworkSummary {
  std::string framework;
  std::vector<double> per_repeat;
  double mean = 0.0;
  // Sample standard deviation over repeats; 0 for a single repeat.
  double std = 0.0;
};

struct RunReport {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<RepeatResult> repeats;
  std::vector<FrameworkSummary> summaries;

  const FrameworkSummary& summary(std::string_view framework) const;
};

// Runs every framework in cfg.frameworks() for cfg.repeats repeats with seeds
// master_seed + repeat. All frameworks of a repeat share one partition.
// Errors are rethrown with the framework and repeat prepended.
RunReport run_experiment(const ExperimentConfig& cfg);

// One repeat of one framework on a prepared partition.
EventLog run_framework(const ExperimentConfig& cfg, std::string_view framework,
                       const PartitionedDataset& parts, std::uint64_t seed);

enum class SweepParam { kLambda, kTemperature };

SweepParam parse_sweep_param(std::string_view name);
std::string_view sweep_param_name(SweepParam param);

struct SweepCell {
  double value = 0.0;
  std::optional<RunReport> report;
  std::string error;  // set when the cell failed
};

struct SweepResult {
  SweepParam param = SweepParam::kLambda;
  ExperimentConfig base;
  std::vector<SweepCell> cells;
};

// One run per value with everything else fixed. A failing cell records its
// error and the sweep moves on.
SweepResult sweep(const ExperimentConfig& cfg, SweepParam param,
                  const std::vector<double>& values);

// Defaults for the unlearning demo: an unset unlearn_round becomes rounds / 2.
ExperimentConfig unlearn_demo_config(ExperimentConfig cfg);

// Writes summary.csv, timeline.csv (repeat 0), timeline_r<k>.csv (k >= 1)
// and config.snapshot into `dir`, each via temp file + rename.
void emit_metrics(const RunReport& report, const std::filesystem::path& dir);

// Writes sweep_summary.csv and one sub-directory of metrics per good cell.
void emit_sweep(const SweepResult& result, const std::filesystem::path& dir);

// Summary table text: "framework,statistic,value" rows.
std::string summary_csv(const RunReport& report);
std::string sweep_summary_csv(const SweepResult& result);

// Atomically replaces `path` with `contents`. Throws kIo naming the path.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace hdus

#endif  // HDUS_EXPERIMENT_H_
