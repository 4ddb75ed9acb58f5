// Copyright 2026 The vqcast authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vqcast/model.hpp"

namespace vqcast::checkpoint {

// Flat binary container, little-endian:
//   magic "VQCASTCK" (8 bytes)
//   u32 version (currently 1)
//   u64 config_hash
//   u32 entry_count
//   per entry: u32 name_len, name bytes, u32 rows, u32 cols,
//              rows*cols f64 values in row-major order.
// Vectors are stored as n x 1. The layout is stable across runs.

struct NamedTensor {
    std::string name;
    Eigen::MatrixXd value;
};

struct Container {
    std::uint64_t config_hash = 0;
    std::vector<NamedTensor> tensors;

    const Eigen::MatrixXd &get(const std::string &name) const;
    bool has(const std::string &name) const;
};

void save(const std::filesystem::path &path, std::span<const NamedTensor> tensors,
          std::uint64_t config_hash);
Container load(const std::filesystem::path &path);

/// Reads only the header hash; cheap existence/ownership check.
std::uint64_t peek_config_hash(const std::filesystem::path &path);

/// Serializes every trainable tensor of the model plus the architecture
/// metadata needed to validate a later load.
void save_model(const std::filesystem::path &path,
                const model::HybridModelParams &params,
                std::uint64_t config_hash);

/// Rebuilds a model from `path`, validating the stored architecture and
/// hash against `expected`. Throws EvalError on any mismatch.
model::HybridModelParams load_model(const std::filesystem::path &path,
                                    const model::ModelConfig &expected,
                                    std::uint64_t expected_hash);

} // namespace vqcast::checkpoint
