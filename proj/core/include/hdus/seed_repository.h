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

#ifndef HDUS_SEED_REPOSITORY_H_
#define HDUS_SEED_REPOSITORY_H_

#include <compare>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hdus/matrix.h"
#include "hdus/mlp.h"

namespace hdus {

struct ClientId {
  int value = -1;

  friend auto operator<=>(const ClientId&, const ClientId&) = default;
};

std::string to_string(ClientId id);

// The seed models a client has received from its neighbors, in insertion
// order. The owner's own seed never appears here.
class SeedRepository {
 public:
  struct Entry {
    ClientId neighbor;
    std::shared_ptr<const MlpModel> seed;
  };

  SeedRepository() = default;
  SeedRepository(ClientId owner, std::size_t features, std::size_t classes);

  ClientId owner() const noexcept { return owner_; }
  std::size_t features() const noexcept { return features_; }
  std::size_t classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool contains(ClientId neighbor) const;
  const MlpModel* find(ClientId neighbor) const;
  std::vector<ClientId> neighbor_ids() const;

  // Equal owners, dims, neighbor order and seed parameters.
  bool operator==(const SeedRepository& other) const;

 private:
  friend SeedRepository add_neighbor_seed(SeedRepository, ClientId, MlpModel);
  friend SeedRepository unlearn_neighbor(SeedRepository, ClientId);

  ClientId owner_;
  std::size_t features_ = 0;
  std::size_t classes_ = 0;
  std::vector<Entry> entries_;
};

// Appends a neighbor's seed. Throws kConflict if the id is already present
// (replacement is remove-then-add) or is the owner, kValidation if (F, C)
// differ. The input repository is left untouched on error.
SeedRepository add_neighbor_seed(SeedRepository repo, ClientId neighbor,
                                 MlpModel seed);

// Deletes a neighbor's seed. Throws kNotFound if the id is absent.
SeedRepository unlearn_neighbor(SeedRepository repo, ClientId neighbor);

enum class EnsembleCombine { kProbabilities, kLogits };

struct EnsembleConfig {
  double lambda = 0.3;
  EnsembleCombine combine = EnsembleCombine::kProbabilities;

  void validate() const;
};

// (1 - lambda) * p_main + (lambda / K) * sum_k p_seed_k with p = softmax of
// each model's logits. With an empty repository the main model's
// probabilities are returned unchanged. In kLogits mode the same mixture is
// applied to raw logits and the result passed through softmax.
Matrix ensemble_predict(const MlpModel& main, const SeedRepository& repo,
                        const EnsembleConfig& cfg, const Matrix& batch);

// Thread-safe holder that publishes whole repositories. Readers get an
// immutable snapshot, so a prediction sees either the old or the new
// repository and never a partially updated one.
class RepositoryHandle {
 public:
  RepositoryHandle() : repo_(std::make_shared<const SeedRepository>()) {}
  explicit RepositoryHandle(SeedRepository repo);
  RepositoryHandle(const RepositoryHandle& other);
  RepositoryHandle& operator=(const RepositoryHandle& other);

  std::shared_ptr<const SeedRepository> snapshot() const;
  void publish(SeedRepository repo);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const SeedRepository> repo_;
};

}  // namespace hdus

#endif  // HDUS_SEED_REPOSITORY_H_
