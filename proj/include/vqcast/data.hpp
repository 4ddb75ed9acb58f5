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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vqcast::data {

/// Internal channel order of every series matrix.
inline constexpr std::array<const char *, 4> kChannelNames = {"HR", "SpO2",
                                                              "Pulse", "RR"};
inline constexpr int kNumChannels = 4;

/// One subject's 1 Hz numerics: T rows, columns in kChannelNames order.
struct SubjectRecording {
    std::string subject_id;
    Eigen::MatrixXd series;
    /// Raw blanks filled at ingestion by forward-backward carry.
    int imputed_cells = 0;

    int seconds() const { return static_cast<int>(series.rows()); }
};

/// Reads a per-subject CSV: a header row naming the time column and the
/// four numeric channels (source column names HR, PULSE, RESP, SpO2;
/// case-insensitive, bracketed units ignored), then one row per second
/// with timestamps increasing by exactly 1. Blank cells are imputed
/// forward-backward and counted. Throws IngestError with the offending
/// line number on malformed input, missing columns, duplicate timestamps
/// or irregular sampling.
SubjectRecording ingest_recording(const std::filesystem::path &path,
                                  std::string subject_id);

/// A supervised sample: L seconds of history ending at `anchor` and the
/// value of every channel at the requested offsets past the anchor.
struct WindowSample {
    std::string subject_id;
    int anchor;          // 0-based row index of the last history row
    Eigen::MatrixXd x;   // window_len x kNumChannels
    Eigen::MatrixXd y;   // horizons.size() x kNumChannels
};

/// Sliding windows with the given stride (seconds). Anchors run from
/// window_len - 1 to seconds - 1 - max(horizons); a too-short recording
/// yields an empty list. With stride 1 the count is
/// T - window_len - max(horizons) + 1.
std::vector<WindowSample> build_windows(const SubjectRecording &rec,
                                        int window_len,
                                        const std::vector<int> &horizons,
                                        int stride = 1);

/// Per-channel standardization statistics.
struct ChannelStats {
    Eigen::Vector4d mean;
    Eigen::Vector4d stddev;  // floored at 1e-8

    bool operator==(const ChannelStats &other) const {
        return mean == other.mean && stddev == other.stddev;
    }
};

/// Mean and population standard deviation over all rows of the given
/// recordings. Channels with (near-)zero spread are floored at 1e-8 with a
/// warning on stderr.
ChannelStats compute_channel_stats(std::span<const SubjectRecording> recordings);

/// One leave-one-subject-out fold: the held-out subject, the remaining
/// training subjects, and statistics computed from the training subjects
/// only.
struct FoldSpec {
    int index;  // 1-based
    std::string test_subject;
    std::vector<std::string> train_subjects;
    ChannelStats stats;
};

/// One fold per subject, numbered in input order. Throws ConfigError on
/// duplicate subject ids or fewer than two subjects.
std::vector<FoldSpec> make_lopo_folds(std::span<const SubjectRecording> recordings);

Eigen::MatrixXd standardize_matrix(const Eigen::MatrixXd &m, const ChannelStats &s);
Eigen::MatrixXd destandardize_matrix(const Eigen::MatrixXd &m, const ChannelStats &s);

/// Standardizes both the history and the targets of a sample.
WindowSample standardize(const WindowSample &sample, const ChannelStats &stats);

/// Test-time corruption of standardized inputs. Targets are never touched.
struct CorruptionSpec {
    enum class Kind { gaussian_noise, missing };
    Kind kind;
    double level;  // sigma for noise, masking probability for missing
    std::uint64_t seed;
};

/// x' = x + e with e ~ N(0, sigma^2) drawn independently per element.
/// sigma = 0 returns x unchanged; negative sigma is a ConfigError.
Eigen::MatrixXd inject_noise(const Eigen::MatrixXd &x, double sigma,
                             std::uint64_t seed);

/// Masks each element independently with probability `rate`, then fills
/// every channel forward from the last observed value and backward across
/// any leading gap; a fully masked channel falls back to 0 (the
/// standardized mean). rate = 0 returns x unchanged; rate outside [0, 1)
/// is a ConfigError.
Eigen::MatrixXd inject_missing(const Eigen::MatrixXd &x, double rate,
                               std::uint64_t seed);

Eigen::MatrixXd corrupt(const Eigen::MatrixXd &x, const CorruptionSpec &spec);

struct ManifestEntry {
    std::string subject_id;
    std::filesystem::path path;
};

/// Manifest CSV: header "subject_id,path", one recording per row.
/// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path &path);

} // namespace vqcast::data
