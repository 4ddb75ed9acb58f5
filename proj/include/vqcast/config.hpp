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
#include <string>
#include <vector>

#include "vqcast/model.hpp"

namespace vqcast::config {

struct CorruptionConfig {
    std::vector<double> noise_sigmas = {0.0, 0.01, 0.05};
    std::vector<double> missing_rates = {0.0, 0.1, 0.3};
    std::uint64_t seed = 2024;
};

/// One experiment configuration, loaded from a commented JSON file that
/// overrides the built-in defaults (240 s windows, horizons 15/30/60,
/// 6 qubits, depth 3, 30 epochs, batch 128, learning rate 1e-3).
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path out_dir;
    std::uint64_t seed = 1;
    std::string folds_spec = "all";
    std::vector<model::Variant> variants = {model::Variant::hybrid,
                                            model::Variant::gru_only,
                                            model::Variant::lstm_baseline};
    int jobs = 0;      // 0 = hardware concurrency
    int stride = 1;    // window stride in seconds
    bool raw_units = false;
    model::ModelConfig model;  // variant/seed fields are filled per task
    CorruptionConfig corruptions;

    /// Parses the file (// and /* */ comments allowed). Unknown keys are
    /// ConfigErrors. Relative manifest paths resolve against the config
    /// file's directory; a relative out_dir resolves against
    /// $VQCAST_OUT_ROOT when set, otherwise the working directory.
    static RunConfig load(const std::filesystem::path &path);

    /// Fingerprint of everything that influences results (excludes out_dir
    /// and jobs). Embedded in checkpoints and every report file.
    std::uint64_t hash() const;

    /// Model config for one training task, with a seed derived from the
    /// run seed, the variant and the fold index.
    model::ModelConfig model_for(model::Variant variant, int fold_index) const;

    void validate() const;
};

/// "all", "4", "2-5" or comma lists like "1,3,7-9" -> sorted unique
/// 1-based fold indices. Throws ConfigError on malformed specs or indices
/// outside [1, n_folds].
std::vector<int> parse_fold_spec(const std::string &spec, int n_folds);

/// Comma-separated variant list ("hybrid,gru_only,lstm").
std::vector<model::Variant> parse_variant_list(const std::string &list);

} // namespace vqcast::config
