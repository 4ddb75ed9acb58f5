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

#include "vqcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "vqcast/common.hpp"

namespace vqcast::eval {

namespace {

using data::kChannelNames;

// Streaming mean/std across subjects (population std, labelled as the
// spread across subjects).
struct MeanStd {
    double sum = 0, sumsq = 0;
    int n = 0;
    void add(double v) {
        sum += v;
        sumsq += v * v;
        ++n;
    }
    double mean() const { return n ? sum / n : std::nan(""); }
    double std() const {
        if (!n) return std::nan("");
        const double m = mean();
        return std::sqrt(std::max(0.0, sumsq / n - m * m));
    }
};

void check_same_coverage(const std::map<std::string, MetricTable> &tables) {
    if (tables.size() < 2) return;
    const MetricTable &ref = tables.begin()->second;
    for (const auto &[name, table] : tables) {
        if (table.horizons != ref.horizons ||
            table.subjects.size() != ref.subjects.size()) {
            throw EvalError("metric tables do not cover the same cells (model '" +
                            name + "')");
        }
        for (std::size_t s = 0; s < table.subjects.size(); ++s) {
            if (table.subjects[s].subject_id != ref.subjects[s].subject_id) {
                throw EvalError("metric tables list different subjects");
            }
        }
    }
}

std::uint64_t window_seed(std::uint64_t base, const std::string &subject_id,
                          int anchor) {
    return mix_seed(mix_seed(base, subject_id),
                    static_cast<std::uint64_t>(anchor));
}

} // namespace

SubjectErrors compute_errors(const std::string &subject_id,
                             std::span<const Eigen::MatrixXd> predictions,
                             std::span<const Eigen::MatrixXd> targets) {
    if (predictions.size() != targets.size()) {
        throw EvalError("prediction/target count mismatch for subject " +
                        subject_id);
    }
    SubjectErrors e;
    e.subject_id = subject_id;
    e.n_windows = static_cast<int>(predictions.size());
    if (predictions.empty()) {
        std::cerr << "warning: subject " << subject_id
                  << " has no evaluation windows; cells marked absent\n";
        return e;
    }
    const Eigen::Index rows = predictions[0].rows();
    const Eigen::Index cols = predictions[0].cols();
    Eigen::MatrixXd abs_sum = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd sq_sum = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].rows() != rows || predictions[i].cols() != cols ||
            targets[i].rows() != rows || targets[i].cols() != cols) {
            throw EvalError("prediction/target shape mismatch for subject " +
                            subject_id);
        }
        const Eigen::MatrixXd diff = predictions[i] - targets[i];
        abs_sum += diff.cwiseAbs();
        sq_sum += diff.cwiseProduct(diff);
    }
    const double n = static_cast<double>(predictions.size());
    e.mae = abs_sum / n;
    e.rmse = (sq_sum / n).cwiseSqrt();
    return e;
}

Aggregates aggregate(const MetricTable &table) {
    const int n_h = static_cast<int>(table.horizons.size());
    const int n_t = data::kNumChannels;

    Aggregates a;
    a.cell_mae_mean.setZero(n_h, n_t);
    a.cell_mae_std.setZero(n_h, n_t);
    a.cell_rmse_mean.setZero(n_h, n_t);
    a.cell_rmse_std.setZero(n_h, n_t);
    a.task_mae_mean.setZero(n_t);
    a.task_mae_std.setZero(n_t);
    a.task_rmse_mean.setZero(n_t);
    a.task_rmse_std.setZero(n_t);
    a.horizon_mae_mean.setZero(n_h);
    a.horizon_mae_std.setZero(n_h);
    a.horizon_rmse_mean.setZero(n_h);
    a.horizon_rmse_std.setZero(n_h);

    std::vector<MeanStd> cell_mae(static_cast<std::size_t>(n_h * n_t));
    std::vector<MeanStd> cell_rmse(static_cast<std::size_t>(n_h * n_t));
    std::vector<MeanStd> task_mae(static_cast<std::size_t>(n_t)),
        task_rmse(static_cast<std::size_t>(n_t));
    std::vector<MeanStd> hor_mae(static_cast<std::size_t>(n_h)),
        hor_rmse(static_cast<std::size_t>(n_h));
    MeanStd macro_mae, macro_rmse;

    for (const SubjectErrors &s : table.subjects) {
        if (s.n_windows == 0) {
            std::cerr << "warning: excluding subject " << s.subject_id
                      << " from aggregation (no windows)\n";
            continue;
        }
        for (int h = 0; h < n_h; ++h) {
            for (int t = 0; t < n_t; ++t) {
                cell_mae[static_cast<std::size_t>(h * n_t + t)].add(s.mae(h, t));
                cell_rmse[static_cast<std::size_t>(h * n_t + t)].add(s.rmse(h, t));
            }
        }
        for (int t = 0; t < n_t; ++t) {
            task_mae[static_cast<std::size_t>(t)].add(s.mae.col(t).mean());
            task_rmse[static_cast<std::size_t>(t)].add(s.rmse.col(t).mean());
        }
        for (int h = 0; h < n_h; ++h) {
            hor_mae[static_cast<std::size_t>(h)].add(s.mae.row(h).mean());
            hor_rmse[static_cast<std::size_t>(h)].add(s.rmse.row(h).mean());
        }
        macro_mae.add(s.mae.mean());
        macro_rmse.add(s.rmse.mean());
    }

    for (int h = 0; h < n_h; ++h) {
        for (int t = 0; t < n_t; ++t) {
            const auto &m = cell_mae[static_cast<std::size_t>(h * n_t + t)];
            const auto &r = cell_rmse[static_cast<std::size_t>(h * n_t + t)];
            a.cell_mae_mean(h, t) = m.mean();
            a.cell_mae_std(h, t) = m.std();
            a.cell_rmse_mean(h, t) = r.mean();
            a.cell_rmse_std(h, t) = r.std();
        }
    }
    for (int t = 0; t < n_t; ++t) {
        a.task_mae_mean(t) = task_mae[static_cast<std::size_t>(t)].mean();
        a.task_mae_std(t) = task_mae[static_cast<std::size_t>(t)].std();
        a.task_rmse_mean(t) = task_rmse[static_cast<std::size_t>(t)].mean();
        a.task_rmse_std(t) = task_rmse[static_cast<std::size_t>(t)].std();
    }
    for (int h = 0; h < n_h; ++h) {
        a.horizon_mae_mean(h) = hor_mae[static_cast<std::size_t>(h)].mean();
        a.horizon_mae_std(h) = hor_mae[static_cast<std::size_t>(h)].std();
        a.horizon_rmse_mean(h) = hor_rmse[static_cast<std::size_t>(h)].mean();
        a.horizon_rmse_std(h) = hor_rmse[static_cast<std::size_t>(h)].std();
    }
    a.macro_mae_mean = macro_mae.mean();
    a.macro_mae_std = macro_mae.std();
    a.macro_rmse_mean = macro_rmse.mean();
    a.macro_rmse_std = macro_rmse.std();
    a.n_subjects = macro_mae.n;
    return a;
}

std::map<std::string, double>
avg_wins(const std::map<std::string, MetricTable> &tables) {
    if (tables.empty()) throw EvalError("avg_wins needs at least one model");
    check_same_coverage(tables);

    std::map<std::string, Aggregates> aggs;
    for (const auto &[name, table] : tables) aggs[name] = aggregate(table);

    const int n_h = static_cast<int>(tables.begin()->second.horizons.size());
    const int n_t = data::kNumChannels;

    std::map<std::string, double> wins;
    for (const auto &[name, table] : tables) wins[name] = 0.0;

    // Each pair awards 0.5 for the best MAE and 0.5 for the best RMSE,
    // split equally among exact ties.
    auto award = [&](auto cell_of) {
        for (int h = 0; h < n_h; ++h) {
            for (int t = 0; t < n_t; ++t) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto &[name, agg] : aggs) {
                    best = std::min(best, cell_of(agg)(h, t));
                }
                std::vector<std::string> winners;
                for (const auto &[name, agg] : aggs) {
                    if (cell_of(agg)(h, t) == best) winners.push_back(name);
                }
                for (const std::string &w : winners) {
                    wins[w] += 0.5 / static_cast<double>(winners.size());
                }
            }
        }
    };
    award([](const Aggregates &a) -> const Eigen::MatrixXd & {
        return a.cell_mae_mean;
    });
    award([](const Aggregates &a) -> const Eigen::MatrixXd & {
        return a.cell_rmse_mean;
    });

    const double pairs = static_cast<double>(n_h * n_t);
    for (auto &[name, w] : wins) w = 100.0 * w / pairs;
    return wins;
}

std::string RankView::label(const std::vector<int> &horizons) const {
    if (kind == Kind::task) {
        return std::string("task:") + kChannelNames[static_cast<std::size_t>(index)];
    }
    return "horizon:" + std::to_string(horizons[static_cast<std::size_t>(index)]);
}

std::map<std::string, double>
patient_rank_scores(const std::map<std::string, MetricTable> &tables,
                    const RankView &view) {
    if (tables.size() < 2) {
        throw EvalError("ranking needs at least two models");
    }
    check_same_coverage(tables);

    const MetricTable &ref = tables.begin()->second;
    const int m = static_cast<int>(tables.size());
    const std::size_t n_subjects = ref.subjects.size();

    std::map<std::string, double> score_sum;
    for (const auto &[name, t] : tables) score_sum[name] = 0.0;

    int counted_subjects = 0;
    for (std::size_t s = 0; s < n_subjects; ++s) {
        if (ref.subjects[s].n_windows == 0) continue;
        ++counted_subjects;

        // View error per model: RMSE averaged across the folded axis.
        std::vector<std::pair<double, std::string>> errors;
        for (const auto &[name, table] : tables) {
            const SubjectErrors &e = table.subjects[s];
            const double v = view.kind == RankView::Kind::task
                                 ? e.rmse.col(view.index).mean()
                                 : e.rmse.row(view.index).mean();
            errors.emplace_back(v, name);
        }
        std::sort(errors.begin(), errors.end());

        // Scores m..1 by ascending error; exact ties share the average of
        // the scores they span, preserving the rank sum.
        std::size_t i = 0;
        while (i < errors.size()) {
            std::size_t j = i;
            while (j + 1 < errors.size() && errors[j + 1].first == errors[i].first) {
                ++j;
            }
            double total = 0.0;
            for (std::size_t k = i; k <= j; ++k) {
                total += static_cast<double>(m - static_cast<int>(k));
            }
            const double shared = total / static_cast<double>(j - i + 1);
            for (std::size_t k = i; k <= j; ++k) {
                score_sum[errors[k].second] += shared;
            }
            i = j + 1;
        }
    }

    if (counted_subjects == 0) throw EvalError("no subjects to rank");
    std::map<std::string, double> out;
    for (const auto &[name, sum] : score_sum) {
        out[name] = sum / (static_cast<double>(m) *
                           static_cast<double>(counted_subjects));
    }
    return out;
}

std::map<std::string, std::map<std::string, double>>
all_rank_scores(const std::map<std::string, MetricTable> &tables) {
    const std::vector<int> &horizons = tables.begin()->second.horizons;
    std::map<std::string, std::map<std::string, double>> out;
    for (int t = 0; t < data::kNumChannels; ++t) {
        const RankView view{RankView::Kind::task, t};
        out[view.label(horizons)] = patient_rank_scores(tables, view);
    }
    for (int h = 0; h < static_cast<int>(horizons.size()); ++h) {
        const RankView view{RankView::Kind::horizon, h};
        out[view.label(horizons)] = patient_rank_scores(tables, view);
    }
    return out;
}

SubjectErrors evaluate_subject(const model::HybridModelParams &params,
                               std::span<const data::WindowSample> windows,
                               const data::CorruptionSpec *corruption) {
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> targets;
    inputs.reserve(windows.size());
    targets.reserve(windows.size());
    for (const data::WindowSample &w : windows) {
        if (corruption != nullptr) {
            data::CorruptionSpec per_window = *corruption;
            per_window.seed = window_seed(corruption->seed, w.subject_id, w.anchor);
            inputs.push_back(data::corrupt(w.x, per_window));
        } else {
            inputs.push_back(w.x);
        }
        targets.push_back(w.y);
    }
    const std::vector<Eigen::MatrixXd> preds =
        model::predict_batch(params, inputs);
    const std::string subject_id = windows.empty() ? "" : windows[0].subject_id;
    return compute_errors(subject_id, preds, targets);
}

SubjectErrors evaluate_subject_raw(const model::HybridModelParams &params,
                                   std::span<const data::WindowSample> windows,
                                   const data::ChannelStats &stats) {
    std::vector<Eigen::MatrixXd> inputs, targets;
    for (const data::WindowSample &w : windows) {
        inputs.push_back(w.x);
        targets.push_back(data::destandardize_matrix(w.y, stats));
    }
    std::vector<Eigen::MatrixXd> preds = model::predict_batch(params, inputs);
    for (Eigen::MatrixXd &p : preds) p = data::destandardize_matrix(p, stats);
    const std::string subject_id = windows.empty() ? "" : windows[0].subject_id;
    return compute_errors(subject_id, preds, targets);
}

std::vector<RobustnessPoint>
robustness_sweep(const model::HybridModelParams &params,
                 std::span<const data::WindowSample> test_windows,
                 std::span<const data::CorruptionSpec> specs) {
    std::vector<RobustnessPoint> out;
    out.reserve(specs.size());
    for (const data::CorruptionSpec &spec : specs) {
        const SubjectErrors e = evaluate_subject(params, test_windows, &spec);
        RobustnessPoint p;
        p.level = spec.level;
        p.macro_mae = e.mae.mean();
        p.macro_rmse = e.rmse.mean();
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

namespace {

std::ofstream open_report(const std::filesystem::path &path,
                          std::uint64_t config_hash) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw EvalError("cannot write '" + path.string() + "'");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    out << "# config_hash=" << buf << "\n";
    return out;
}

std::uint64_t parse_hash_line(const std::string &line,
                              const std::filesystem::path &path) {
    const std::string prefix = "# config_hash=";
    if (line.rfind(prefix, 0) != 0) {
        throw EvalError("missing config hash header in '" + path.string() + "'");
    }
    return std::stoull(line.substr(prefix.size()), nullptr, 16);
}

} // namespace

void write_metrics_csv(const std::filesystem::path &path,
                       const std::map<std::string, MetricTable> &tables,
                       std::uint64_t config_hash) {
    std::ofstream out = open_report(path, config_hash);
    out << "model,task,horizon,mae_mean,mae_std,rmse_mean,rmse_std\n";
    for (const auto &[name, table] : tables) {
        const Aggregates a = aggregate(table);
        const int n_h = static_cast<int>(table.horizons.size());
        for (int t = 0; t < data::kNumChannels; ++t) {
            for (int h = 0; h < n_h; ++h) {
                out << name << ',' << kChannelNames[static_cast<std::size_t>(t)]
                    << ',' << table.horizons[static_cast<std::size_t>(h)] << ','
                    << format_double(a.cell_mae_mean(h, t)) << ','
                    << format_double(a.cell_mae_std(h, t)) << ','
                    << format_double(a.cell_rmse_mean(h, t)) << ','
                    << format_double(a.cell_rmse_std(h, t)) << '\n';
            }
            out << name << ',' << kChannelNames[static_cast<std::size_t>(t)]
                << ",avg," << format_double(a.task_mae_mean(t)) << ','
                << format_double(a.task_mae_std(t)) << ','
                << format_double(a.task_rmse_mean(t)) << ','
                << format_double(a.task_rmse_std(t)) << '\n';
        }
        for (int h = 0; h < n_h; ++h) {
            out << name << ",avg," << table.horizons[static_cast<std::size_t>(h)]
                << ',' << format_double(a.horizon_mae_mean(h)) << ','
                << format_double(a.horizon_mae_std(h)) << ','
                << format_double(a.horizon_rmse_mean(h)) << ','
                << format_double(a.horizon_rmse_std(h)) << '\n';
        }
        out << name << ",avg,avg," << format_double(a.macro_mae_mean) << ','
            << format_double(a.macro_mae_std) << ','
            << format_double(a.macro_rmse_mean) << ','
            << format_double(a.macro_rmse_std) << '\n';
    }
}

void write_per_subject_csv(const std::filesystem::path &path,
                           const std::map<std::string, MetricTable> &tables,
                           std::uint64_t config_hash) {
    std::ofstream out = open_report(path, config_hash);
    out << "model,subject,task,horizon,n_windows,mae,rmse\n";
    char buf[64];
    for (const auto &[name, table] : tables) {
        for (const SubjectErrors &s : table.subjects) {
            for (int h = 0; h < static_cast<int>(table.horizons.size()); ++h) {
                for (int t = 0; t < data::kNumChannels; ++t) {
                    out << name << ',' << s.subject_id << ','
                        << kChannelNames[static_cast<std::size_t>(t)] << ','
                        << table.horizons[static_cast<std::size_t>(h)] << ','
                        << s.n_windows << ',';
                    if (s.n_windows == 0) {
                        out << ",\n";
                        continue;
                    }
                    std::snprintf(buf, sizeof(buf), "%.17g", s.mae(h, t));
                    out << buf << ',';
                    std::snprintf(buf, sizeof(buf), "%.17g", s.rmse(h, t));
                    out << buf << '\n';
                }
            }
        }
    }
}

std::map<std::string, MetricTable>
read_per_subject_csv(const std::filesystem::path &path,
                     std::uint64_t expected_hash) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot read '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw EvalError("empty metrics file");
    if (parse_hash_line(line, path) != expected_hash) {
        throw EvalError("config hash mismatch in '" + path.string() +
                        "'; re-run evaluate with this config");
    }
    std::getline(in, line);  // header

    std::map<std::string, MetricTable> tables;
    std::map<std::string, std::map<std::string, std::size_t>> subject_pos;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string model, subject, task, horizon, n_windows, mae, rmse;
        std::getline(ss, model, ',');
        std::getline(ss, subject, ',');
        std::getline(ss, task, ',');
        std::getline(ss, horizon, ',');
        std::getline(ss, n_windows, ',');
        std::getline(ss, mae, ',');
        std::getline(ss, rmse, ',');

        MetricTable &table = tables[model];
        const int h = std::stoi(horizon);
        int h_idx = -1;
        for (std::size_t i = 0; i < table.horizons.size(); ++i) {
            if (table.horizons[i] == h) h_idx = static_cast<int>(i);
        }
        if (h_idx < 0) {
            table.horizons.push_back(h);
            h_idx = static_cast<int>(table.horizons.size()) - 1;
        }
        int t_idx = -1;
        for (int t = 0; t < data::kNumChannels; ++t) {
            if (task == kChannelNames[static_cast<std::size_t>(t)]) t_idx = t;
        }
        if (t_idx < 0) throw EvalError("unknown task '" + task + "'");

        auto &pos = subject_pos[model];
        if (!pos.contains(subject)) {
            pos[subject] = table.subjects.size();
            SubjectErrors e;
            e.subject_id = subject;
            table.subjects.push_back(std::move(e));
        }
        SubjectErrors &e = table.subjects[pos[subject]];
        e.n_windows = std::stoi(n_windows);
        if (e.mae.size() == 0) {
            // Horizon count is not known until the rows arrive; grow lazily.
            e.mae.conservativeResize(0, data::kNumChannels);
            e.rmse.conservativeResize(0, data::kNumChannels);
        }
        if (e.mae.rows() <= h_idx) {
            e.mae.conservativeResize(h_idx + 1, data::kNumChannels);
            e.rmse.conservativeResize(h_idx + 1, data::kNumChannels);
        }
        if (e.n_windows > 0) {
            e.mae(h_idx, t_idx) = std::stod(mae);
            e.rmse(h_idx, t_idx) = std::stod(rmse);
        }
    }
    return tables;
}

void write_avgwins_csv(const std::filesystem::path &path,
                       const std::map<std::string, double> &wins,
                       std::uint64_t config_hash) {
    std::ofstream out = open_report(path, config_hash);
    out << "model,avg_wins_pct\n";
    for (const auto &[name, pct] : wins) {
        out << name << ',' << format_double(pct) << '\n';
    }
}

void write_ranking_csv(
    const std::filesystem::path &path,
    const std::map<std::string, std::map<std::string, double>> &scores,
    std::uint64_t config_hash) {
    std::ofstream out = open_report(path, config_hash);
    out << "view,model,score\n";
    for (const auto &[view, per_model] : scores) {
        for (const auto &[name, score] : per_model) {
            out << view << ',' << name << ',' << format_double(score) << '\n';
        }
    }
}

void write_robustness_csv(const std::filesystem::path &path,
                          std::span<const RobustnessRow> rows,
                          std::uint64_t config_hash) {
    std::ofstream out = open_report(path, config_hash);
    out << "model,kind,level,macro_mae,macro_rmse\n";
    for (const RobustnessRow &r : rows) {
        out << r.model << ',' << r.kind << ',' << format_double(r.level) << ','
            << format_double(r.macro_mae) << ',' << format_double(r.macro_rmse)
            << '\n';
    }
}

} // namespace vqcast::eval
