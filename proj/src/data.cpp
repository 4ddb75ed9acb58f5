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

#include "vqcast/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "vqcast/common.hpp"

namespace vqcast::data {

namespace {

constexpr double kStdFloor = 1e-8;

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string &s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Header token -> canonical name: trims, drops quotes and bracketed units,
// uppercases. "Time [s]" -> "TIME", " SpO2" -> "SPO2".
std::string canonical_header(const std::string &raw) {
    std::string t = trim(raw);
    if (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.erase(0, 1);
    if (!t.empty() && (t.back() == '"' || t.back() == '\'')) t.pop_back();
    const std::size_t bracket = t.find('[');
    if (bracket != std::string::npos) t = t.substr(0, bracket);
    t = trim(t);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return t;
}

bool parse_double(const std::string &raw, double &out) {
    const std::string t = trim(raw);
    if (t.empty()) return false;
    char *end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

bool is_missing_cell(const std::string &raw) {
    const std::string t = canonical_header(raw);
    return t.empty() || t == "NAN" || t == "NA" || t == "NULL";
}

// Forward fill, then backward fill across the leading gap. Returns false
// when nothing was observed at all.
bool fill_forward_backward(std::vector<double> &values,
                           const std::vector<bool> &observed) {
    const std::size_t n = values.size();
    std::size_t first = n;
    double last = 0.0;
    bool have_last = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (observed[i]) {
            last = values[i];
            have_last = true;
            if (first == n) first = i;
        } else if (have_last) {
            values[i] = last;
        }
    }
    if (first == n) return false;
    for (std::size_t i = 0; i < first; ++i) values[i] = values[first];
    return true;
}

} // namespace

SubjectRecording ingest_recording(const std::filesystem::path &path,
                                  std::string subject_id) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open '" + path.string() + "'");
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError(path.string() + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    // Map source columns to the internal order HR, SpO2, Pulse, RR.
    const std::vector<std::string> header = split_csv_line(line);
    int time_col = -1;
    std::array<int, kNumChannels> chan_col = {-1, -1, -1, -1};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = canonical_header(header[c]);
        if (name == "TIME" || name == "T" || name == "SECONDS") {
            time_col = static_cast<int>(c);
        } else if (name == "HR") {
            chan_col[0] = static_cast<int>(c);
        } else if (name == "SPO2") {
            chan_col[1] = static_cast<int>(c);
        } else if (name == "PULSE") {
            chan_col[2] = static_cast<int>(c);
        } else if (name == "RESP" || name == "RR") {
            chan_col[3] = static_cast<int>(c);
        }
    }
    if (time_col < 0) {
        throw IngestError(path.string() + ": missing time column in header");
    }
    static constexpr std::array<const char *, kNumChannels> kSourceNames = {
        "HR", "SpO2", "PULSE", "RESP"};
    for (int k = 0; k < kNumChannels; ++k) {
        if (chan_col[static_cast<std::size_t>(k)] < 0) {
            throw IngestError(path.string() + ": missing column " +
                              kSourceNames[static_cast<std::size_t>(k)] +
                              " in header");
        }
    }

    std::array<std::vector<double>, kNumChannels> values;
    std::array<std::vector<bool>, kNumChannels> observed;
    double prev_time = 0.0;
    bool have_prev = false;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) <= time_col) {
            throw IngestError(path.string() + ": line " + std::to_string(line_no) +
                              ": too few fields");
        }
        double t = 0.0;
        if (!parse_double(fields[static_cast<std::size_t>(time_col)], t)) {
            throw IngestError(path.string() + ": line " + std::to_string(line_no) +
                              ": unparseable time value");
        }
        if (have_prev) {
            const double dt = t - prev_time;
            if (std::abs(dt) < 1e-9) {
                throw IngestError(path.string() + ": line " +
                                  std::to_string(line_no) +
                                  ": duplicate timestamp");
            }
            if (std::abs(dt - 1.0) > 1e-6) {
                throw IngestError(path.string() + ": line " +
                                  std::to_string(line_no) +
                                  ": irregular sampling (expected 1 s step, got " +
                                  std::to_string(dt) + ")");
            }
        }
        prev_time = t;
        have_prev = true;

        for (int k = 0; k < kNumChannels; ++k) {
            const int c = chan_col[static_cast<std::size_t>(k)];
            const std::string &cell = static_cast<std::size_t>(c) < fields.size()
                                          ? fields[static_cast<std::size_t>(c)]
                                          : std::string();
            double v = 0.0;
            if (is_missing_cell(cell)) {
                values[static_cast<std::size_t>(k)].push_back(0.0);
                observed[static_cast<std::size_t>(k)].push_back(false);
            } else if (parse_double(cell, v)) {
                values[static_cast<std::size_t>(k)].push_back(v);
                observed[static_cast<std::size_t>(k)].push_back(true);
            } else {
                throw IngestError(path.string() + ": line " +
                                  std::to_string(line_no) + ": unparseable " +
                                  kChannelNames[static_cast<std::size_t>(k)] +
                                  " value '" + trim(cell) + "'");
            }
        }
    }

    const std::size_t rows = values[0].size();
    if (rows == 0) {
        throw IngestError(path.string() + ": no data rows");
    }

    SubjectRecording rec;
    rec.subject_id = std::move(subject_id);
    rec.series.resize(static_cast<Eigen::Index>(rows), kNumChannels);
    for (int k = 0; k < kNumChannels; ++k) {
        auto &vals = values[static_cast<std::size_t>(k)];
        const auto &obs = observed[static_cast<std::size_t>(k)];
        const long missing =
            std::count(obs.begin(), obs.end(), false);
        if (missing == static_cast<long>(rows)) {
            throw IngestError(path.string() + ": channel " +
                              kChannelNames[static_cast<std::size_t>(k)] +
                              " has no observed values");
        }
        if (missing > 0) {
            fill_forward_backward(vals, obs);
            rec.imputed_cells += static_cast<int>(missing);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            rec.series(static_cast<Eigen::Index>(r), k) = vals[r];
        }
    }
    return rec;
}

std::vector<WindowSample> build_windows(const SubjectRecording &rec,
                                        int window_len,
                                        const std::vector<int> &horizons,
                                        int stride) {
    if (window_len < 1 || stride < 1 || horizons.empty()) {
        throw ConfigError("invalid windowing parameters");
    }
    const int hmax = *std::max_element(horizons.begin(), horizons.end());
    const int t_total = rec.seconds();
    if (t_total < window_len + hmax) {
        std::cerr << "warning: recording '" << rec.subject_id << "' too short for "
                  << window_len << "+" << hmax << " s windows (" << t_total
                  << " s); no windows built\n";
        return {};
    }

    std::vector<WindowSample> out;
    for (int anchor = window_len - 1; anchor + hmax <= t_total - 1;
         anchor += stride) {
        WindowSample s;
        s.subject_id = rec.subject_id;
        s.anchor = anchor;
        s.x = rec.series.middleRows(anchor - window_len + 1, window_len);
        s.y.resize(static_cast<Eigen::Index>(horizons.size()), kNumChannels);
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            s.y.row(static_cast<Eigen::Index>(h)) =
                rec.series.row(anchor + horizons[h]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

ChannelStats compute_channel_stats(std::span<const SubjectRecording> recordings) {
    long total = 0;
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    for (const SubjectRecording &r : recordings) {
        sum += r.series.colwise().sum().transpose();
        total += r.seconds();
    }
    if (total == 0) throw ConfigError("no rows to compute statistics from");

    ChannelStats stats;
    stats.mean = sum / static_cast<double>(total);
    Eigen::Vector4d sq = Eigen::Vector4d::Zero();
    for (const SubjectRecording &r : recordings) {
        sq += (r.series.rowwise() - stats.mean.transpose())
                  .array()
                  .square()
                  .colwise()
                  .sum()
                  .matrix()
                  .transpose();
    }
    stats.stddev = (sq / static_cast<double>(total)).cwiseSqrt();
    for (int k = 0; k < kNumChannels; ++k) {
        if (stats.stddev(k) < kStdFloor) {
            std::cerr << "warning: channel " << kChannelNames[static_cast<std::size_t>(k)]
                      << " has (near-)constant training data; std floored at "
                      << kStdFloor << "\n";
            stats.stddev(k) = kStdFloor;
        }
    }
    return stats;
}

std::vector<FoldSpec> make_lopo_folds(std::span<const SubjectRecording> recordings) {
    if (recordings.size() < 2) {
        throw ConfigError("leave-one-out folds need at least 2 subjects");
    }
    std::set<std::string> ids;
    for (const SubjectRecording &r : recordings) {
        if (!ids.insert(r.subject_id).second) {
            throw ConfigError("duplicate subject id '" + r.subject_id + "'");
        }
    }

    std::vector<FoldSpec> folds;
    folds.reserve(recordings.size());
    std::vector<SubjectRecording> train;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        FoldSpec fold;
        fold.index = static_cast<int>(i) + 1;
        fold.test_subject = recordings[i].subject_id;
        train.clear();
        for (std::size_t j = 0; j < recordings.size(); ++j) {
            if (j == i) continue;
            fold.train_subjects.push_back(recordings[j].subject_id);
            train.push_back(recordings[j]);
        }
        fold.stats = compute_channel_stats(train);
        folds.push_back(std::move(fold));
    }
    return folds;
}

Eigen::MatrixXd standardize_matrix(const Eigen::MatrixXd &m, const ChannelStats &s) {
    if (m.cols() != kNumChannels) {
        throw std::invalid_argument("expected a 4-channel matrix");
    }
    return ((m.rowwise() - s.mean.transpose()).array().rowwise() /
            s.stddev.transpose().array())
        .matrix();
}

Eigen::MatrixXd destandardize_matrix(const Eigen::MatrixXd &m,
                                     const ChannelStats &s) {
    if (m.cols() != kNumChannels) {
        throw std::invalid_argument("expected a 4-channel matrix");
    }
    return ((m.array().rowwise() * s.stddev.transpose().array()).matrix().rowwise() +
            s.mean.transpose());
}

WindowSample standardize(const WindowSample &sample, const ChannelStats &stats) {
    WindowSample out = sample;
    out.x = standardize_matrix(sample.x, stats);
    out.y = standardize_matrix(sample.y, stats);
    return out;
}

Eigen::MatrixXd inject_noise(const Eigen::MatrixXd &x, double sigma,
                             std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
    if (sigma == 0.0) return x;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Eigen::MatrixXd out = x;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            out(r, c) += noise(rng);
        }
    }
    return out;
}

Eigen::MatrixXd inject_missing(const Eigen::MatrixXd &x, double rate,
                               std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("missing rate must be in [0, 1)");
    }
    if (rate == 0.0) return x;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution masked(rate);
    Eigen::MatrixXd out = x;
    std::vector<double> col(static_cast<std::size_t>(x.rows()));
    std::vector<bool> obs(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            const std::size_t i = static_cast<std::size_t>(r);
            col[i] = out(r, c);
            obs[i] = !masked(rng);
        }
        if (!fill_forward_backward(col, obs)) {
            std::fill(col.begin(), col.end(), 0.0);  // standardized mean
        }
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            out(r, c) = col[static_cast<std::size_t>(r)];
        }
    }
    return out;
}

Eigen::MatrixXd corrupt(const Eigen::MatrixXd &x, const CorruptionSpec &spec) {
    switch (spec.kind) {
    case CorruptionSpec::Kind::gaussian_noise:
        return inject_noise(x, spec.level, spec.seed);
    case CorruptionSpec::Kind::missing:
        return inject_missing(x, spec.level, spec.seed);
    }
    throw std::logic_error("unknown corruption kind");
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open manifest '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError("manifest '" + path.string() + "' is empty");
    }

    const std::filesystem::path base = path.parent_path();
    std::vector<ManifestEntry> entries;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() < 2) {
            throw IngestError("manifest line " + std::to_string(line_no) +
                              ": expected 'subject_id,path'");
        }
        ManifestEntry e;
        e.subject_id = trim(fields[0]);
        std::filesystem::path p = trim(fields[1]);
        e.path = p.is_absolute() ? p : base / p;
        if (e.subject_id.empty()) {
            throw IngestError("manifest line " + std::to_string(line_no) +
                              ": empty subject id");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace vqcast::data
