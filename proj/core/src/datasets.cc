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

#include "hdus/datasets.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "hdus/error.h"

namespace hdus {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> in, std::size_t at) {
  return (static_cast<std::uint32_t>(in[at]) << 24) |
         (static_cast<std::uint32_t>(in[at + 1]) << 16) |
         (static_cast<std::uint32_t>(in[at + 2]) << 8) |
         static_cast<std::uint32_t>(in[at + 3]);
}

[[noreturn]] void idx_fail(const char* file, std::size_t offset,
                           const std::string& what) {
  fail(ErrorCode::kParse, std::string(file) + " at byte " +
                              std::to_string(offset) + ": " + what);
}

}  // namespace

void LabeledDataset::validate() const {
  if (labels.empty()) fail(ErrorCode::kValidation, "dataset is empty");
  if (features.rows() != labels.size()) {
    fail(ErrorCode::kValidation, "feature rows and labels differ in count");
  }
  if (!row_ids.empty() && row_ids.size() != labels.size()) {
    fail(ErrorCode::kValidation, "row id count differs from sample count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      fail(ErrorCode::kValidation, "label " + std::to_string(labels[i]) +
                                       " at row " + std::to_string(i) +
                                       " outside [0, " +
                                       std::to_string(class_count) + ")");
    }
  }
}

LabeledDataset subset(const LabeledDataset& data,
                      std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.features = select_rows(data.features, indices);
  out.class_count = data.class_count;
  out.scaling = data.scaling;
  out.labels.reserve(indices.size());
  out.row_ids.reserve(indices.size());
  for (std::size_t i : indices) {
    out.labels.push_back(data.labels[i]);
    out.row_ids.push_back(data.row_ids.empty() ? i : data.row_ids[i]);
  }
  return out;
}

LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.feature_dim() != b.feature_dim() || a.class_count != b.class_count) {
    fail(ErrorCode::kDimension, "cannot concatenate datasets with different F or C");
  }
  std::vector<double> data(a.features.values().begin(), a.features.values().end());
  data.insert(data.end(), b.features.values().begin(), b.features.values().end());
  LabeledDataset out;
  out.features = Matrix(a.size() + b.size(), a.feature_dim(), std::move(data));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.class_count = a.class_count;
  out.scaling = a.scaling;
  out.row_ids.resize(out.labels.size());
  std::iota(out.row_ids.begin(), out.row_ids.end(), std::size_t{0});
  return out;
}

std::vector<std::size_t> class_histogram(const LabeledDataset& data) {
  std::vector<std::size_t> counts(data.class_count, 0);
  for (int y : data.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledDataset parse_idx(std::span<const std::uint8_t> image_bytes,
                         std::span<const std::uint8_t> label_bytes,
                         std::size_t class_count) {
  if (image_bytes.size() < 16) idx_fail("image file", image_bytes.size(), "truncated header");
  if (read_be32(image_bytes, 0) != kIdxImageMagic) {
    idx_fail("image file", 0, "bad magic, expected 0x00000803");
  }
  const std::size_t count = read_be32(image_bytes, 4);
  const std::size_t rows = read_be32(image_bytes, 8);
  const std::size_t cols = read_be32(image_bytes, 12);
  const std::size_t pixels = rows * cols;
  if (pixels == 0) idx_fail("image file", 8, "zero image size");
  const std::size_t expected = 16 + count * pixels;
  if (image_bytes.size() < expected) {
    idx_fail("image file", image_bytes.size(),
             "truncated payload, header promises " + std::to_string(expected) + " bytes");
  }
  if (image_bytes.size() > expected) {
    idx_fail("image file", expected, "trailing bytes after " +
                                         std::to_string(count) + " images");
  }

  if (label_bytes.size() < 8) idx_fail("label file", label_bytes.size(), "truncated header");
  if (read_be32(label_bytes, 0) != kIdxLabelMagic) {
    idx_fail("label file", 0, "bad magic, expected 0x00000801");
  }
  const std::size_t label_count = read_be32(label_bytes, 4);
  if (label_count != count) {
    idx_fail("label file", 4, "label count " + std::to_string(label_count) +
                                  " does not match image count " +
                                  std::to_string(count));
  }
  if (label_bytes.size() != 8 + count) {
    idx_fail("label file", std::min(label_bytes.size(), 8 + count),
             "payload length does not match count");
  }

  LabeledDataset out;
  out.class_count = class_count;
  out.scaling = FeatureScaling::kDivide255;
  out.features = Matrix(count, pixels);
  auto values = out.features.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(image_bytes[16 + i]) / 255.0;
  }
  out.labels.resize(count);
  out.row_ids.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t y = label_bytes[8 + i];
    if (y >= class_count) {
      idx_fail("label file", 8 + i, "label " + std::to_string(y) +
                                        " outside [0, " + std::to_string(class_count) + ")");
    }
    out.labels[i] = y;
    out.row_ids[i] = i;
  }
  return out;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 16];
  for (;;) {
    const int n = gzread(file, buffer, sizeof(buffer));
    if (n < 0) {
      gzclose(file);
      fail(ErrorCode::kIo, "read failed for " + path.string());
    }
    if (n == 0) break;
    out.insert(out.end(), buffer, buffer + n);
  }
  gzclose(file);
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images,
                        const std::filesystem::path& labels,
                        std::size_t class_count) {
  return parse_idx(read_binary_file(images), read_binary_file(labels), class_count);
}

LabeledDataset load_idx_directory(const std::filesystem::path& dir) {
  auto locate = [&](const std::string& stem) {
    for (const auto* suffix : {"", ".gz"}) {
      auto candidate = dir / (stem + suffix);
      if (std::filesystem::exists(candidate)) return candidate;
    }
    fail(ErrorCode::kIo, "missing " + (dir / stem).string() + "[.gz]");
  };
  auto train = load_idx(locate("train-images-idx3-ubyte"),
                        locate("train-labels-idx1-ubyte"));
  auto test = load_idx(locate("t10k-images-idx3-ubyte"),
                       locate("t10k-labels-idx1-ubyte"));
  return concatenate(train, test);
}

LabeledDataset gen_blobs(const BlobParams& params, Rng& rng) {
  if (params.classes < 2) fail(ErrorCode::kConfig, "blobs need C >= 2");
  if (params.features < 2) fail(ErrorCode::kConfig, "blobs need F >= 2");
  if (params.modes_per_class < 1) fail(ErrorCode::kConfig, "blobs need >= 1 mode per class");
  if (params.n_per_class < 1) fail(ErrorCode::kConfig, "blobs need >= 1 sample per class");
  if (!(params.spread >= 0.0)) fail(ErrorCode::kConfig, "blob spread must be >= 0");

  const std::size_t f = params.features;
  const std::size_t centers = params.classes * params.modes_per_class;
  Matrix center(centers, f);
  for (double& v : center.values()) v = rng.normal();

  const std::size_t total = params.classes * params.n_per_class;
  LabeledDataset out;
  out.class_count = params.classes;
  out.scaling = FeatureScaling::kStandardized;
  out.features = Matrix(total, f);
  out.labels.resize(total);
  out.row_ids.resize(total);
  std::size_t r = 0;
  for (std::size_t c = 0; c < params.classes; ++c) {
    for (std::size_t i = 0; i < params.n_per_class; ++i, ++r) {
      // Modes are filled round-robin so every mode is populated.
      const std::size_t mode = c * params.modes_per_class + i % params.modes_per_class;
      auto row = out.features.row(r);
      auto mu = center.row(mode);
      for (std::size_t j = 0; j < f; ++j) row[j] = mu[j] + params.spread * rng.normal();
      out.labels[r] = static_cast<int>(c);
      out.row_ids[r] = r;
    }
  }

  for (std::size_t j = 0; j < f; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < total; ++i) mean += out.features(i, j);
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      const double d = out.features(i, j) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(total));
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < total; ++i) {
      out.features(i, j) = (out.features(i, j) - mean) * scale;
    }
  }
  return out;
}

ReferenceSplit split_reference(const LabeledDataset& data, std::size_t ref_size,
                               Rng& rng) {
  if (ref_size >= data.size()) {
    fail(ErrorCode::kCapacity, "reference size " + std::to_string(ref_size) +
                                   " must be below dataset size " +
                                   std::to_string(data.size()));
  }
  ReferenceSplit out;
  if (ref_size == 0) {
    out.reference.features = Matrix(0, data.feature_dim());
    out.remainder = data;
    return out;
  }
  const auto order = rng.permutation(data.size());
  std::span<const std::size_t> all(order);
  auto ref_idx = all.first(ref_size);
  auto rest_idx = all.subspan(ref_size);

  LabeledDataset ref = subset(data, ref_idx);
  out.reference.features = std::move(ref.features);
  out.reference.row_ids = std::move(ref.row_ids);
  out.sealed_labels = SealedLabels(std::move(ref.labels));
  out.remainder = subset(data, rest_idx);
  return out;
}

void write_partition_manifest(const PartitionedDataset& parts, std::ostream& out) {
  out << "role,client_id,row_index\n";
  for (std::size_t c = 0; c < parts.client_splits.size(); ++c) {
    for (std::size_t row : parts.client_splits[c].row_ids) {
      out << "train," << c << ',' << row << '\n';
    }
  }
  for (std::size_t row : parts.test.row_ids) out << "test,-1," << row << '\n';
  for (std::size_t row : parts.reference.row_ids) out << "reference,-1," << row << '\n';
}

}  // namespace hdus
