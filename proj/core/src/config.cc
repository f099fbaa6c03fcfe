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

#include "hdus/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "hdus/error.h"
#include "hdus/event_log.h"

namespace hdus {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  fail(ErrorCode::kConfig, std::string(key) + ": '" + std::string(value) +
                               "' is not " + std::string(expected));
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    bad_value(key, value, "an integer in range");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  try {
    return parse_double(value);
  } catch (const Error&) {
    bad_value(key, value, "a number");
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Field {
  std::string_view key;
  std::string_view help;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field int_field(std::string_view key, std::string_view help, T ExperimentConfig::*member) {
  return {key, help,
          [key, member](ExperimentConfig& c, std::string_view v) {
            c.*member = parse_int<T>(key, v);
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(std::string_view key, std::string_view help,
                 double ExperimentConfig::*member) {
  return {key, help,
          [key, member](ExperimentConfig& c, std::string_view v) {
            c.*member = parse_real(key, v);
          },
          [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

Field string_field(std::string_view key, std::string_view help,
                   std::string ExperimentConfig::*member) {
  return {key, help,
          [member](ExperimentConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      int_field("schema_version", "config schema version (must be 1)",
                &ExperimentConfig::schema_version),
      {"dataset", "blobs | mnist | fmnist",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "blobs") c.dataset = DatasetKind::kBlobs;
         else if (v == "mnist") c.dataset = DatasetKind::kMnist;
         else if (v == "fmnist") c.dataset = DatasetKind::kFmnist;
         else bad_value("dataset", v, "one of blobs, mnist, fmnist");
       },
       [](const ExperimentConfig& c) { return std::string(dataset_name(c.dataset)); }},
      string_field("data_dir", "directory holding IDX files (mnist/fmnist)",
                   &ExperimentConfig::data_dir),
      int_field("blob_classes", "blob class count C", &ExperimentConfig::blob_classes),
      int_field("blob_features", "blob feature dim F", &ExperimentConfig::blob_features),
      real_field("blob_spread", "cluster std-dev around each center",
                 &ExperimentConfig::blob_spread),
      int_field("blob_modes", "Gaussian clusters per class", &ExperimentConfig::blob_modes),
      int_field("samples_per_client", "blob training samples per client",
                &ExperimentConfig::samples_per_client),
      int_field("ref_size", "reference set rows", &ExperimentConfig::ref_size),
      real_field("test_fraction", "test share of the non-reference data",
                 &ExperimentConfig::test_fraction),
      {"reference_source", "heldout | synthetic (blob-generated reference rows)",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "heldout") c.reference_source = ReferenceSource::kHeldOut;
         else if (v == "synthetic") c.reference_source = ReferenceSource::kSynthetic;
         else bad_value("reference_source", v, "heldout or synthetic");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.reference_source == ReferenceSource::kHeldOut ? "heldout"
                                                                            : "synthetic");
       }},
      real_field("reference_fraction", "share of the reference each client uses",
                 &ExperimentConfig::reference_fraction),
      string_field("framework", "hdus | isgd | dsgd | fedunl | sisa_a | all",
                   &ExperimentConfig::framework),
      int_field("n_clients", "number of clients N", &ExperimentConfig::n_clients),
      {"setting", "homogeneous | heterogeneous",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "homogeneous") c.setting = Setting::kHomogeneous;
         else if (v == "heterogeneous") c.setting = Setting::kHeterogeneous;
         else bad_value("setting", v, "homogeneous or heterogeneous");
       },
       [](const ExperimentConfig& c) { return std::string(setting_name(c.setting)); }},
      {"tiers", "comma-separated per-client tiers (small,medium,large); empty = default",
       [](ExperimentConfig& c, std::string_view v) {
         c.tiers.clear();
         v = trim(v);
         while (!v.empty()) {
           const auto comma = v.find(',');
           const auto item = trim(v.substr(0, comma));
           try {
             c.tiers.push_back(parse_tier(item));
           } catch (const Error&) {
             bad_value("tiers", item, "small, medium or large");
           }
           v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
         }
       },
       [](const ExperimentConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.tiers.size(); ++i) {
           if (i) out += ",";
           out += tier_name(c.tiers[i]);
         }
         return out;
       }},
      {"seed_tier", "tier of every exchanged seed model",
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.seed_tier = parse_tier(v);
         } catch (const Error&) {
           bad_value("seed_tier", v, "small, medium or large");
         }
       },
       [](const ExperimentConfig& c) { return std::string(tier_name(c.seed_tier)); }},
      real_field("lambda", "ensemble weight on neighbor seeds, in [0, 1)",
                 &ExperimentConfig::lambda),
      real_field("temperature", "distillation temperature T > 0",
                 &ExperimentConfig::temperature),
      {"ensemble_combine", "probabilities | logits",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "probabilities") c.ensemble_combine = EnsembleCombine::kProbabilities;
         else if (v == "logits") c.ensemble_combine = EnsembleCombine::kLogits;
         else bad_value("ensemble_combine", v, "probabilities or logits");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.ensemble_combine == EnsembleCombine::kProbabilities
                                ? "probabilities"
                                : "logits");
       }},
      int_field("local_epochs", "main-model epochs per round", &ExperimentConfig::local_epochs),
      real_field("lr", "main-model SGD learning rate", &ExperimentConfig::lr),
      int_field("batch_size", "minibatch size", &ExperimentConfig::batch_size),
      int_field("incubate_epochs", "seed distillation epochs per incubation",
                &ExperimentConfig::incubate_epochs),
      real_field("incubate_lr", "seed distillation learning rate",
                 &ExperimentConfig::incubate_lr),
      {"incubate_warm_start", "true: continue from the previous seed; false: fresh init",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "true" || v == "1") c.incubate_warm_start = true;
         else if (v == "false" || v == "0") c.incubate_warm_start = false;
         else bad_value("incubate_warm_start", v, "true or false");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.incubate_warm_start ? "true" : "false");
       }},
      int_field("incubate_every_rounds", "incubation cadence in rounds",
                &ExperimentConfig::incubate_every_rounds),
      int_field("exchange_every_rounds", "seed exchange cadence in rounds",
                &ExperimentConfig::exchange_every_rounds),
      real_field("fedunl_alpha", "FedUnl remedy weight on distillation vs CE",
                 &ExperimentConfig::fedunl_alpha),
      int_field("fedunl_remedy_epochs", "FedUnl remedy epochs per recovery round",
                &ExperimentConfig::fedunl_remedy_epochs),
      real_field("fedunl_lr", "FedUnl remedy learning rate", &ExperimentConfig::fedunl_lr),
      int_field("rounds", "training rounds", &ExperimentConfig::rounds),
      int_field("unlearn_round", "rounds before the unlearning request (0 = none)",
                &ExperimentConfig::unlearn_round),
      int_field("unlearn_client", "id of the quitting client",
                &ExperimentConfig::unlearn_client),
      int_field("repeats", "independent runs (seeds master_seed + i)",
                &ExperimentConfig::repeats),
      int_field("master_seed", "master RNG seed", &ExperimentConfig::master_seed),
      string_field("output_path", "output directory", &ExperimentConfig::output_path),
      int_field("threads", "worker threads for per-client phases", &ExperimentConfig::threads),
  };
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void check(bool ok, std::string_view key, const std::string& what) {
  if (!ok) fail(ErrorCode::kConfig, std::string(key) + ": " + what);
}

}  // namespace

std::string_view dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kBlobs: return "blobs";
    case DatasetKind::kMnist: return "mnist";
    case DatasetKind::kFmnist: return "fmnist";
  }
  return "?";
}

std::string_view setting_name(Setting setting) {
  return setting == Setting::kHomogeneous ? "homogeneous" : "heterogeneous";
}

void ExperimentConfig::validate() const {
  check(schema_version == kConfigSchemaVersion, "schema_version",
        "unsupported version " + std::to_string(schema_version));
  check(dataset == DatasetKind::kBlobs || !data_dir.empty(), "data_dir",
        "required for IDX datasets");
  check(blob_classes >= 2, "blob_classes", "must be >= 2");
  check(blob_features >= 2, "blob_features", "must be >= 2");
  check(blob_spread >= 0.0, "blob_spread", "must be >= 0");
  check(blob_modes >= 1, "blob_modes", "must be >= 1");
  check(samples_per_client >= 1, "samples_per_client", "must be >= 1");
  check(ref_size >= 1, "ref_size", "must be >= 1");
  check(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction", "must be in (0, 1)");
  check(reference_fraction > 0.0 && reference_fraction <= 1.0, "reference_fraction",
        "must be in (0, 1]");
  static const std::set<std::string, std::less<>> known = {"hdus", "isgd", "dsgd",
                                                           "fedunl", "sisa_a", "all"};
  check(known.contains(framework), "framework", "unknown framework '" + framework + "'");
  check(n_clients >= 1, "n_clients", "must be >= 1");
  const std::size_t classes = dataset == DatasetKind::kBlobs ? blob_classes : 10;
  check(n_clients <= classes, "n_clients", "must not exceed the class count");
  check(tiers.empty() || tiers.size() == n_clients, "tiers",
        "needs exactly n_clients entries");
  check(lambda >= 0.0 && lambda < 1.0, "lambda", "must be in [0, 1)");
  check(temperature > 0.0, "temperature", "must be > 0");
  check(local_epochs >= 0, "local_epochs", "must be >= 0");
  check(lr >= 0.0, "lr", "must be >= 0");
  check(batch_size >= 1, "batch_size", "must be >= 1");
  check(incubate_epochs >= 1, "incubate_epochs", "must be >= 1");
  check(incubate_lr >= 0.0, "incubate_lr", "must be >= 0");
  check(incubate_every_rounds >= 1, "incubate_every_rounds", "must be >= 1");
  check(exchange_every_rounds >= 1, "exchange_every_rounds", "must be >= 1");
  check(fedunl_alpha >= 0.0 && fedunl_alpha <= 1.0, "fedunl_alpha", "must be in [0, 1]");
  check(fedunl_remedy_epochs >= 1, "fedunl_remedy_epochs", "must be >= 1");
  check(fedunl_lr >= 0.0, "fedunl_lr", "must be >= 0");
  check(rounds >= 1, "rounds", "must be >= 1");
  check(unlearn_round >= 0 && unlearn_round <= rounds, "unlearn_round",
        "must be in [0, rounds]");
  check(unlearn_client >= 0 && static_cast<std::size_t>(unlearn_client) < n_clients,
        "unlearn_client", "must be a valid client id");
  check(unlearn_round == 0 || n_clients >= 2, "unlearn_round",
        "unlearning needs at least two clients");
  check(repeats >= 1, "repeats", "must be >= 1");
  check(!output_path.empty(), "output_path", "must not be empty");
  check(threads >= 1, "threads", "must be >= 1");
}

std::vector<std::string> ExperimentConfig::frameworks() const {
  if (framework == "all") return {"hdus", "isgd", "dsgd", "fedunl", "sisa_a"};
  return {framework};
}

std::vector<ModelTier> ExperimentConfig::client_tiers() const {
  if (!tiers.empty()) return tiers;
  if (setting == Setting::kHomogeneous) {
    return std::vector<ModelTier>(n_clients, ModelTier::kLarge);
  }
  // 6 clients -> 2/2/2, 5 clients -> 1/2/2.
  const std::size_t small = n_clients / 3;
  const std::size_t medium = (n_clients - small) / 2;
  std::vector<ModelTier> out;
  for (std::size_t i = 0; i < n_clients; ++i) {
    out.push_back(i < small ? ModelTier::kSmall
                  : i < small + medium ? ModelTier::kMedium
                                       : ModelTier::kLarge);
  }
  return out;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key,
                      std::string_view value) {
  const Field* f = find_field(key);
  if (f == nullptr) fail(ErrorCode::kConfig, "unknown key '" + std::string(key) + "'");
  f->set(cfg, value);
}

ExperimentConfig parse_config(std::string_view text, std::string_view source,
                              bool validate) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kConfig, where + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (seen.contains(key)) {
      fail(ErrorCode::kConfig, where + ": duplicate key '" + std::string(key) + "'");
    }
    seen.emplace(key);
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, where + ": " + e.detail());
    }
  }
  if (validate) cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, bool validate) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfig, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string(), validate);
}

std::string config_snapshot(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_snapshot(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<ConfigKeyInfo>& config_keys() {
  static const std::vector<ConfigKeyInfo> keys = [] {
    std::vector<ConfigKeyInfo> out;
    for (const auto& f : fields()) out.push_back({f.key, f.help});
    return out;
  }();
  return keys;
}

}  // namespace hdus
