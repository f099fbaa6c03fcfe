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

#include "hdus/seed_repository.h"

#include <algorithm>

#include "hdus/error.h"
#include "hdus/losses.h"

namespace hdus {

std::string to_string(ClientId id) { return std::to_string(id.value); }

SeedRepository::SeedRepository(ClientId owner, std::size_t features,
                               std::size_t classes)
    : owner_(owner), features_(features), classes_(classes) {}

bool SeedRepository::contains(ClientId neighbor) const {
  return find(neighbor) != nullptr;
}

const MlpModel* SeedRepository::find(ClientId neighbor) const {
  auto it = std::ranges::find(entries_, neighbor, &Entry::neighbor);
  return it == entries_.end() ? nullptr : it->seed.get();
}

std::vector<ClientId> SeedRepository::neighbor_ids() const {
  std::vector<ClientId> ids;
  ids.reserve(entries_.size());
  for (const auto& e : entries_) ids.push_back(e.neighbor);
  return ids;
}

bool SeedRepository::operator==(const SeedRepository& other) const {
  if (owner_ != other.owner_ || features_ != other.features_ ||
      classes_ != other.classes_ || entries_.size() != other.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].neighbor != other.entries_[i].neighbor ||
        !(*entries_[i].seed == *other.entries_[i].seed)) {
      return false;
    }
  }
  return true;
}

SeedRepository add_neighbor_seed(SeedRepository repo, ClientId neighbor,
                                 MlpModel seed) {
  if (neighbor == repo.owner_) {
    fail(ErrorCode::kConflict, "client " + to_string(neighbor) +
                                   " cannot store its own seed");
  }
  if (repo.contains(neighbor)) {
    fail(ErrorCode::kConflict, "neighbor " + to_string(neighbor) +
                                   " already has a seed in the repository of client " +
                                   to_string(repo.owner_));
  }
  if (seed.spec().input_dim() != repo.features_ ||
      seed.spec().output_dim() != repo.classes_) {
    fail(ErrorCode::kValidation,
         "seed from neighbor " + to_string(neighbor) + " has spec " +
             seed.spec().to_string() + ", repository expects F=" +
             std::to_string(repo.features_) + " C=" + std::to_string(repo.classes_));
  }
  repo.entries_.push_back(
      {neighbor, std::make_shared<const MlpModel>(std::move(seed))});
  return repo;
}

SeedRepository unlearn_neighbor(SeedRepository repo, ClientId neighbor) {
  auto it = std::ranges::find(repo.entries_, neighbor,
                              &SeedRepository::Entry::neighbor);
  if (it == repo.entries_.end()) {
    fail(ErrorCode::kNotFound, "neighbor " + to_string(neighbor) +
                                   " is not in the repository of client " +
                                   to_string(repo.owner_));
  }
  repo.entries_.erase(it);
  return repo;
}

void EnsembleConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    fail(ErrorCode::kConfig,
         "lambda must be in [0, 1), got " + std::to_string(lambda));
  }
}

Matrix ensemble_predict(const MlpModel& main, const SeedRepository& repo,
                        const EnsembleConfig& cfg, const Matrix& batch) {
  cfg.validate();
  const std::size_t classes = main.spec().output_dim();
  for (const auto& e : repo.entries()) {
    if (e.seed->spec().input_dim() != batch.cols() ||
        e.seed->spec().output_dim() != classes) {
      fail(ErrorCode::kDimension, "seed of neighbor " + to_string(e.neighbor) +
                                      " has spec " + e.seed->spec().to_string() +
                                      ", incompatible with batch of " +
                                      std::to_string(batch.cols()) +
                                      " features and " + std::to_string(classes) +
                                      " classes");
    }
  }
  const bool use_probs = cfg.combine == EnsembleCombine::kProbabilities;
  Matrix main_out = mlp_forward(main, batch);
  if (use_probs) main_out = softmax_rows(main_out, 1.0);
  if (repo.empty()) {
    return use_probs ? main_out : softmax_rows(main_out, 1.0);
  }

  Matrix seed_sum(batch.rows(), classes);
  for (const auto& e : repo.entries()) {
    Matrix out = mlp_forward(*e.seed, batch);
    if (use_probs) out = softmax_rows(out, 1.0);
    auto acc = seed_sum.values();
    auto src = out.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
  }
  const double main_weight = 1.0 - cfg.lambda;
  const double seed_weight = cfg.lambda / static_cast<double>(repo.size());
  auto dst = main_out.values();
  auto seeds = seed_sum.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = main_weight * dst[i] + seed_weight * seeds[i];
  }
  return use_probs ? main_out : softmax_rows(main_out, 1.0);
}

RepositoryHandle::RepositoryHandle(SeedRepository repo)
    : repo_(std::make_shared<const SeedRepository>(std::move(repo))) {}

RepositoryHandle::RepositoryHandle(const RepositoryHandle& other)
    : repo_(other.snapshot()) {}

RepositoryHandle& RepositoryHandle::operator=(const RepositoryHandle& other) {
  if (this != &other) {
    auto snap = other.snapshot();
    std::lock_guard lock(mu_);
    repo_ = std::move(snap);
  }
  return *this;
}

std::shared_ptr<const SeedRepository> RepositoryHandle::snapshot() const {
  std::lock_guard lock(mu_);
  return repo_;
}

void RepositoryHandle::publish(SeedRepository repo) {
  auto next = std::make_shared<const SeedRepository>(std::move(repo));
  std::lock_guard lock(mu_);
  repo_ = std::move(next);
}

}  // namespace hdus
