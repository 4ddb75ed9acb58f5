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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqcast/config.hpp"
#include "vqcast/data.hpp"
#include "vqcast/eval.hpp"
#include "vqcast/model.hpp"

namespace vqcast::pipeline {

/// Validates every manifest entry, optionally writing a JSON report of
/// durations, imputation counts and rejections. `ok` is false when any
/// subject failed or was rejected.
struct IngestOutcome {
    nlohmann::json report;
    bool ok = true;
};
IngestOutcome run_ingest(const std::filesystem::path &manifest,
                         const std::optional<std::filesystem::path> &report_path,
                         int min_seconds = 300);

/// Ingested corpus with its leave-one-subject-out folds.
struct Dataset {
    std::vector<data::SubjectRecording> recordings;
    std::vector<data::FoldSpec> folds;
};
/// Loads and validates the whole corpus (every subject must ingest cleanly
/// and be long enough for the configured windows).
Dataset load_dataset(const config::RunConfig &cfg);

std::filesystem::path checkpoint_path(const config::RunConfig &cfg,
                                      model::Variant variant, int fold_index);

/// Optional command-line narrowing of the configured fold/variant set.
struct TrainOverrides {
    std::optional<std::string> folds_spec;
    std::optional<std::vector<model::Variant>> variants;
    std::optional<int> jobs;
};

/// Trains every requested (variant, fold) pair, skipping existing
/// checkpoints with a matching config hash. Fold tasks run in parallel up
/// to the requested job count; each task owns its state. Failed folds are
/// reported at the end via TrainError; completed ones stay on disk.
void run_train(const config::RunConfig &cfg, const TrainOverrides &overrides = {});

/// Evaluates every configured (variant, fold) checkpoint on the held-out
/// subject and writes metrics.csv, per_subject_metrics.csv and
/// avgwins.csv (plus *_raw.csv variants when raw_units is set). Throws
/// EvalError listing the gaps when checkpoints are missing.
void run_evaluate(const config::RunConfig &cfg);

/// Noise or missing-rate sweep over the hybrid and gru_only checkpoints;
/// writes robustness_<kind>.csv with per-level macro errors averaged over
/// the held-out subjects.
void run_ablate(const config::RunConfig &cfg, data::CorruptionSpec::Kind kind);

/// Ranks the models in per_subject_metrics.csv (written by run_evaluate)
/// and writes ranking.csv with every task and horizon view.
void run_rank(const config::RunConfig &cfg);

/// Standardized train/validation/test window tensors for one fold. The
/// validation split is the last tenth of each training subject's windows,
/// monitoring only.
struct FoldData {
    model::TrainSet train;
    model::TrainSet val;
    std::vector<data::WindowSample> test;  // standardized
};
FoldData prepare_fold(const Dataset &dataset, const data::FoldSpec &fold,
                      const model::ModelConfig &mcfg, int stride);

} // namespace vqcast::pipeline
