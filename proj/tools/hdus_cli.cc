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

// Command-line front end: run, sweep, unlearn-demo, validate-config.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hdus/config.h"
#include "hdus/error.h"
#include "hdus/event_log.h"
#include "hdus/experiment.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Config file path plus one optional override per config key.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App& cmd, ConfigOptions& opts) {
  cmd.add_option("-c,--config", opts.config_path, "config file (key = value lines)");
  for (const auto& info : hdus::config_keys()) {
    const std::string key(info.key);
    cmd.add_option_function<std::string>(
           "--" + key, [&opts, key](const std::string& v) { opts.overrides[key] = v; },
           std::string(info.help))
        ->type_name("VALUE")
        ->group("Config keys");
  }
}

// Defaults, then the file, then flags; validated last.
hdus::ExperimentConfig resolve_config(const ConfigOptions& opts) {
  hdus::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = hdus::load_config(opts.config_path, false);
  for (const auto& [key, value] : opts.overrides) {
    try {
      hdus::set_config_value(cfg, key, value);
    } catch (const hdus::Error& e) {
      hdus::fail(hdus::ErrorCode::kConfig, "--" + e.detail());
    }
  }
  cfg.validate();
  return cfg;
}

void print_summary(const hdus::RunReport& report) {
  std::printf("%-8s %10s %10s\n", "framework", "mean", "std");
  for (const auto& s : report.summaries) {
    std::printf("%-8s %10.4f %10.4f\n", s.framework.c_str(), s.mean, s.std);
  }
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    try {
      out.push_back(hdus::parse_double(text.substr(pos, comma - pos)));
    } catch (const hdus::Error&) {
      hdus::fail(hdus::ErrorCode::kConfig,
                 "--values: '" + text.substr(pos, comma - pos) + "' is not a number");
    }
    pos = comma + 1;
  }
  return out;
}

// Mean accuracy just before and just after the request, per framework.
void print_unlearn_jump(const hdus::RunReport& report) {
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> jump;
  for (const auto& r : report.repeats.front().log.records()) {
    if (r.metric != "mean_accuracy") continue;
    if (r.round == -1) jump[r.framework].first = r.value;
    if (r.round == 0) jump[r.framework].second = r.value;
  }
  std::printf("%-8s %10s %10s\n", "framework", "acc(0-)", "acc(0+)");
  for (const auto& s : report.summaries) {
    const auto& [before, after] = jump[s.framework];
    std::printf("%-8s %10.4f %10.4f\n", s.framework.c_str(), before.value_or(NAN),
                after.value_or(NAN));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized unlearning simulator"};
  app.require_subcommand(1);

  ConfigOptions run_opts, sweep_opts, demo_opts, check_opts;
  auto* run = app.add_subcommand("run", "run every configured framework and write metrics");
  add_config_options(*run, run_opts);

  auto* sweep = app.add_subcommand("sweep", "vary lambda or temperature over a value grid");
  add_config_options(*sweep, sweep_opts);
  std::string param;
  std::string values;
  sweep->add_option("--param", param, "lambda | temperature")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();

  auto* demo = app.add_subcommand(
      "unlearn-demo", "run with an unlearning request (default: after rounds / 2)");
  add_config_options(*demo, demo_opts);

  auto* check = app.add_subcommand("validate-config", "validate and print the resolved config");
  add_config_options(*check, check_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      const auto cfg = resolve_config(run_opts);
      const auto report = hdus::run_experiment(cfg);
      hdus::emit_metrics(report, cfg.output_path);
      print_summary(report);
      std::printf("wrote %s (config_hash=%s)\n", cfg.output_path.c_str(),
                  report.config_hash.c_str());
    } else if (*sweep) {
      const auto cfg = resolve_config(sweep_opts);
      const auto p = hdus::parse_sweep_param(param);
      const auto result = hdus::sweep(cfg, p, parse_values(values));
      hdus::emit_sweep(result, cfg.output_path);
      std::fputs(hdus::sweep_summary_csv(result).c_str(), stdout);
    } else if (*demo) {
      const auto cfg = hdus::unlearn_demo_config(resolve_config(demo_opts));
      cfg.validate();
      const auto report = hdus::run_experiment(cfg);
      hdus::emit_metrics(report, cfg.output_path);
      print_unlearn_jump(report);
      std::printf("wrote %s (config_hash=%s)\n", cfg.output_path.c_str(),
                  report.config_hash.c_str());
    } else if (*check) {
      const auto cfg = resolve_config(check_opts);
      std::printf("# config_hash=%s\n%s", hdus::config_hash(cfg).c_str(),
                  hdus::config_snapshot(cfg).c_str());
    }
  } catch (const hdus::Error& e) {
    std::cerr << "hdus: " << e.what() << "\n";
    return e.code() == hdus::ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "hdus: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
