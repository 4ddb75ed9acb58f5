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
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vqcast/data.hpp"
#include "vqcast/model.hpp"

namespace vqcast::eval {

/// Per-subject forecast errors: one MAE/RMSE pair per (horizon, task)
/// cell, computed over that subject's test windows. Values are in
/// standardized units unless stated otherwise.
struct SubjectErrors {
    std::string subject_id;
    Eigen::MatrixXd mae;   // horizons x tasks
    Eigen::MatrixXd rmse;  // horizons x tasks
    int n_windows = 0;
};

/// Cell-wise MAE and RMSE over aligned prediction/target pairs
/// (each horizons x tasks). A subject with no windows gets NaN cells and
/// n_windows = 0; aggregation skips it with a warning.
SubjectErrors compute_errors(const std::string &subject_id,
                             std::span<const Eigen::MatrixXd> predictions,
                             std::span<const Eigen::MatrixXd> targets);

struct MetricTable {
    std::vector<int> horizons;
    std::vector<SubjectErrors> subjects;
};

/// Unweighted means: each view averages per subject first, then across
/// subjects; the reported spread is the standard deviation across subjects.
struct Aggregates {
    Eigen::MatrixXd cell_mae_mean, cell_mae_std;    // horizons x tasks
    Eigen::MatrixXd cell_rmse_mean, cell_rmse_std;
    Eigen::VectorXd task_mae_mean, task_mae_std;    // per task, horizon-averaged
    Eigen::VectorXd task_rmse_mean, task_rmse_std;
    Eigen::VectorXd horizon_mae_mean, horizon_mae_std;  // per horizon, task-averaged
    Eigen::VectorXd horizon_rmse_mean, horizon_rmse_std;
    double macro_mae_mean = 0, macro_mae_std = 0;
    double macro_rmse_mean = 0, macro_rmse_std = 0;
    int n_subjects = 0;
};

Aggregates aggregate(const MetricTable &table);

/// Percentage of (task, horizon) pairs each model wins, on the
/// subject-averaged cells. Every pair awards one point: half for the
/// lowest MAE, half for the lowest RMSE, each half split equally among the
/// exactly-tied best models; percentages therefore sum to 100. Requires
/// identical subject and horizon coverage across models.
std::map<std::string, double>
avg_wins(const std::map<std::string, MetricTable> &tables);

/// One ranking view: a physiological task (RMSE averaged across horizons)
/// or a horizon (RMSE averaged across tasks).
struct RankView {
    enum class Kind { task, horizon };
    Kind kind;
    int index;  // task index 0..3 or horizon position 0..H-1

    std::string label(const std::vector<int> &horizons) const;
};

/// Per subject, models are ranked by increasing view error and scored
/// m..1 (ties receive the average of the scores they span); the result is
/// sum(score) / (m * N), in [1/m, 1] for untied rankings.
std::map<std::string, double>
patient_rank_scores(const std::map<std::string, MetricTable> &tables,
                    const RankView &view);

/// All seven views (4 tasks + H horizons), keyed by view label.
std::map<std::string, std::map<std::string, double>>
all_rank_scores(const std::map<std::string, MetricTable> &tables);

/// Predicts one subject's standardized test windows, optionally corrupting
/// the inputs first (targets untouched). Per-window corruption seeds are
/// derived from spec.seed, the subject id and the anchor, so results do
/// not depend on evaluation order.
SubjectErrors evaluate_subject(const model::HybridModelParams &params,
                               std::span<const data::WindowSample> windows,
                               const data::CorruptionSpec *corruption = nullptr);

/// Same, but errors computed in raw units via destandardization.
SubjectErrors evaluate_subject_raw(const model::HybridModelParams &params,
                                   std::span<const data::WindowSample> windows,
                                   const data::ChannelStats &stats);

struct RobustnessPoint {
    double level;
    double macro_mae;
    double macro_rmse;
};

/// One point per corruption level for one fold's test subject: corrupt the
/// inputs, predict, macro-average MAE/RMSE over all (task, horizon) cells.
/// A zero level reproduces the clean evaluation exactly.
std::vector<RobustnessPoint>
robustness_sweep(const model::HybridModelParams &params,
                 std::span<const data::WindowSample> test_windows,
                 std::span<const data::CorruptionSpec> specs);

// ---------------------------------------------------------------------------
// Report files. Every file starts with "# config_hash=<16 hex digits>"; all
// tables use '.' decimals, ',' separators, a header row and UTF-8.
// ---------------------------------------------------------------------------

void write_metrics_csv(const std::filesystem::path &path,
                       const std::map<std::string, MetricTable> &tables,
                       std::uint64_t config_hash);
void write_per_subject_csv(const std::filesystem::path &path,
                           const std::map<std::string, MetricTable> &tables,
                           std::uint64_t config_hash);
/// Inverse of write_per_subject_csv. Throws EvalError on a hash mismatch.
std::map<std::string, MetricTable>
read_per_subject_csv(const std::filesystem::path &path,
                     std::uint64_t expected_hash);
void write_avgwins_csv(const std::filesystem::path &path,
                       const std::map<std::string, double> &wins,
                       std::uint64_t config_hash);
void write_ranking_csv(
    const std::filesystem::path &path,
    const std::map<std::string, std::map<std::string, double>> &scores,
    std::uint64_t config_hash);

struct RobustnessRow {
    std::string model;
    std::string kind;  // "noise" or "missing"
    double level;
    double macro_mae;
    double macro_rmse;
};
void write_robustness_csv(const std::filesystem::path &path,
                          std::span<const RobustnessRow> rows,
                          std::uint64_t config_hash);

/// "%.10g" with '.' decimals regardless of locale.
std::string format_double(double v);

} // namespace vqcast::eval
