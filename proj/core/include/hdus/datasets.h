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

#ifndef HDUS_DATASETS_H_
#define HDUS_DATASETS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "hdus/distillation.h"
#include "hdus/matrix.h"
#include "hdus/rng.h"

namespace hdus {

enum class FeatureScaling { kNone, kDivide255, kStandardized };

struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t class_count = 0;
  FeatureScaling scaling = FeatureScaling::kNone;
  // Source row of each sample; stable across subsetting.
  std::vector<std::size_t> row_ids;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
  void validate() const;
};

LabeledDataset subset(const LabeledDataset& data,
                      std::span<const std::size_t> indices);

// Concatenates datasets with equal F and C; row_ids are renumbered
// sequentially.
LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b);

std::vector<std::size_t> class_histogram(const LabeledDataset& data);

// IDX3 images (magic 0x00000803) + IDX1 labels (magic 0x00000801). Pixels are
// flattened to rows*cols features and scaled by 1/255. Throws kParse with the
// byte offset on malformed input.
LabeledDataset parse_idx(std::span<const std::uint8_t> image_bytes,
                         std::span<const std::uint8_t> label_bytes,
                         std::size_t class_count = 10);

// Reads a file, transparently inflating gzip.
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

LabeledDataset load_idx(const std::filesystem::path& images,
                        const std::filesystem::path& labels,
                        std::size_t class_count = 10);

// Loads the standard train + t10k file pair from `dir` (".gz" variants
// accepted) and concatenates them, train first.
LabeledDataset load_idx_directory(const std::filesystem::path& dir);

struct BlobParams {
  std::size_t n_per_class = 100;
  std::size_t classes = 10;
  std::size_t features = 20;
  // Std-dev of each cluster around its center, in units of the center scale.
  double spread = 1.0;
  // Each class is a mixture of this many Gaussian clusters.
  std::size_t modes_per_class = 1;
};

// Gaussian clusters with N(0, I) centers; output standardized per feature to
// zero mean and unit variance. Exactly n_per_class samples per class.
LabeledDataset gen_blobs(const BlobParams& params, Rng& rng);

// Labels of the reference rows, readable only by the FedUnl baseline.
class SealedLabels {
 public:
  SealedLabels() = default;
  explicit SealedLabels(std::vector<int> labels) : labels_(std::move(labels)) {}

  std::size_t size() const { return labels_.size(); }

 private:
  friend struct FedUnlLabelAccess;
  std::vector<int> labels_;
};

struct ReferenceSplit {
  ReferenceSet reference;
  SealedLabels sealed_labels;
  LabeledDataset remainder;
};

// Carves `ref_size` random rows out as unlabeled reference features.
ReferenceSplit split_reference(const LabeledDataset& data, std::size_t ref_size,
                               Rng& rng);

struct PartitionedDataset {
  std::vector<LabeledDataset> client_splits;
  LabeledDataset test;
  ReferenceSet reference;
  SealedLabels reference_labels;
  // Classes each client may sample from, ascending.
  std::vector<std::vector<int>> class_menu;
  std::vector<int> omitted_class;

  std::size_t client_count() const { return client_splits.size(); }
};

// Reference carved first, then a test fraction of the remainder, then the
// pool is divided into N equal non-overlapping splits where client i draws
// only from all classes except omitted_class[i] (a seeded permutation of the
// classes). Requires N <= C.
PartitionedDataset partition_noniid(const LabeledDataset& data, std::size_t clients,
                                    std::size_t ref_size, double test_fraction,
                                    Rng& rng);

// Audit table: "role,client_id,row_index" with role in {train,test,reference}
// and client_id -1 for non-client rows.
void write_partition_manifest(const PartitionedDataset& parts, std::ostream& out);

}  // namespace hdus

#endif  // HDUS_DATASETS_H_
