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

#include "vqcast/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "vqcast/checkpoint.hpp"
#include "vqcast/common.hpp"

namespace vqcast::pipeline {

namespace {

using nlohmann::json;

std::mutex g_log_mutex;

void log_line(const std::string &msg) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << msg << "\n";
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Task {
    model::Variant variant;
    int fold_index;  // 1-based
};

// Runs tasks on `jobs` workers; returns per-task error messages (empty on
// success). Task order in the result matches the input.
std::vector<std::string> run_tasks(const std::vector<Task> &tasks, int jobs,
                                   const std::function<void(const Task &)> &fn) {
    std::vector<std::string> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                fn(tasks[i]);
            } catch (const std::exception &e) {
                errors[i] = e.what();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread &t : pool) t.join();
    }
    return errors;
}

int effective_jobs(const config::RunConfig &cfg, const TrainOverrides &overrides) {
    int jobs = overrides.jobs.value_or(cfg.jobs);
    if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) jobs = 1;
    }
    return jobs;
}

const data::SubjectRecording &find_recording(const Dataset &dataset,
                                             const std::string &subject_id) {
    for (const data::SubjectRecording &r : dataset.recordings) {
        if (r.subject_id == subject_id) return r;
    }
    throw EvalError("unknown subject '" + subject_id + "'");
}

} // namespace

IngestOutcome run_ingest(const std::filesystem::path &manifest,
                         const std::optional<std::filesystem::path> &report_path,
                         int min_seconds) {
    const std::vector<data::ManifestEntry> entries = data::load_manifest(manifest);
    if (entries.empty()) {
        throw IngestError("manifest '" + manifest.string() + "' lists no subjects");
    }

    IngestOutcome outcome;
    json subjects = json::array();
    int accepted = 0, rejected = 0;
    for (const data::ManifestEntry &e : entries) {
        json row;
        row["subject_id"] = e.subject_id;
        row["path"] = e.path.string();
        try {
            const data::SubjectRecording rec =
                data::ingest_recording(e.path, e.subject_id);
            row["seconds"] = rec.seconds();
            row["imputed_cells"] = rec.imputed_cells;
            if (rec.seconds() < min_seconds) {
                row["accepted"] = false;
                row["reason"] = "recording shorter than " +
                                std::to_string(min_seconds) + " s";
                ++rejected;
            } else {
                row["accepted"] = true;
                ++accepted;
            }
        } catch (const IngestError &err) {
            row["accepted"] = false;
            row["reason"] = err.what();
            ++rejected;
        }
        subjects.push_back(std::move(row));
    }
    outcome.report["subjects"] = std::move(subjects);
    outcome.report["n_accepted"] = accepted;
    outcome.report["n_rejected"] = rejected;
    outcome.report["min_seconds"] = min_seconds;
    outcome.ok = rejected == 0;

    if (report_path) {
        std::filesystem::create_directories(report_path->parent_path());
        std::ofstream out(*report_path);
        if (!out) throw IngestError("cannot write report '" + report_path->string() + "'");
        out << outcome.report.dump(2) << "\n";
    }
    return outcome;
}

Dataset load_dataset(const config::RunConfig &cfg) {
    const std::vector<data::ManifestEntry> entries = data::load_manifest(cfg.manifest);
    if (entries.empty()) {
        throw IngestError("manifest '" + cfg.manifest.string() + "' lists no subjects");
    }
    const int min_seconds = cfg.model.window_len + cfg.model.max_horizon();

    Dataset dataset;
    dataset.recordings.reserve(entries.size());
    for (const data::ManifestEntry &e : entries) {
        data::SubjectRecording rec = data::ingest_recording(e.path, e.subject_id);
        if (rec.seconds() < min_seconds) {
            throw IngestError("subject '" + e.subject_id + "' is too short (" +
                              std::to_string(rec.seconds()) + " s < " +
                              std::to_string(min_seconds) + " s)");
        }
        dataset.recordings.push_back(std::move(rec));
    }
    dataset.folds = data::make_lopo_folds(dataset.recordings);
    return dataset;
}

std::filesystem::path checkpoint_path(const config::RunConfig &cfg,
                                      model::Variant variant, int fold_index) {
    return cfg.out_dir / model::to_string(variant) /
           ("fold_" + std::to_string(fold_index)) / "checkpoint.bin";
}

FoldData prepare_fold(const Dataset &dataset, const data::FoldSpec &fold,
                      const model::ModelConfig &mcfg, int stride) {
    FoldData out;
    for (const std::string &subject : fold.train_subjects) {
        const data::SubjectRecording &rec = find_recording(dataset, subject);
        const std::vector<data::WindowSample> windows =
            data::build_windows(rec, mcfg.window_len, mcfg.horizons, stride);
        // Last tenth of each subject's windows (by time) is monitored only.
        const std::size_t n_val = windows.size() / 10;
        const std::size_t n_train = windows.size() - n_val;
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const data::WindowSample z = data::standardize(windows[i], fold.stats);
            if (i < n_train) {
                out.train.x.push_back(z.x);
                out.train.y.push_back(z.y);
            } else {
                out.val.x.push_back(z.x);
                out.val.y.push_back(z.y);
            }
        }
    }
    const data::SubjectRecording &test_rec =
        find_recording(dataset, fold.test_subject);
    for (const data::WindowSample &w :
         data::build_windows(test_rec, mcfg.window_len, mcfg.horizons, stride)) {
        out.test.push_back(data::standardize(w, fold.stats));
    }
    return out;
}

void run_train(const config::RunConfig &cfg, const TrainOverrides &overrides) {
    const Dataset dataset = load_dataset(cfg);
    const std::uint64_t hash = cfg.hash();

    const std::vector<int> folds = config::parse_fold_spec(
        overrides.folds_spec.value_or(cfg.folds_spec),
        static_cast<int>(dataset.folds.size()));
    const std::vector<model::Variant> variants =
        overrides.variants.value_or(cfg.variants);

    std::vector<Task> tasks;
    for (model::Variant v : variants) {
        for (int f : folds) tasks.push_back({v, f});
    }

    // Refuse to mix checkpoints across configs before any task starts.
    for (const Task &task : tasks) {
        const std::filesystem::path path =
            checkpoint_path(cfg, task.variant, task.fold_index);
        if (std::filesystem::exists(path) &&
            checkpoint::peek_config_hash(path) != hash) {
            throw ConfigError("checkpoint '" + path.string() +
                              "' belongs to a different config (hash " +
                              hash_hex(checkpoint::peek_config_hash(path)) +
                              "); use a fresh out_dir");
        }
    }

    const auto train_one = [&](const Task &task) {
        const std::filesystem::path path =
            checkpoint_path(cfg, task.variant, task.fold_index);
        const std::string label =
            model::to_string(task.variant) + " fold " + std::to_string(task.fold_index);
        if (std::filesystem::exists(path)) {
            log_line("[train] " + label + ": skipped (checkpoint exists)");
            return;
        }
        const data::FoldSpec &fold =
            dataset.folds[static_cast<std::size_t>(task.fold_index - 1)];
        const model::ModelConfig mcfg = cfg.model_for(task.variant, task.fold_index);
        const FoldData fd = prepare_fold(dataset, fold, mcfg, cfg.stride);
        log_line("[train] " + label + ": " + std::to_string(fd.train.size()) +
                 " train / " + std::to_string(fd.val.size()) + " val windows");

        const model::TrainResult result = model::train_fold(mcfg, fd.train, fd.val);
        checkpoint::save_model(path, result.params, hash);

        std::ofstream trace(path.parent_path() / "loss_trace.csv");
        trace << "# config_hash=" << hash_hex(hash) << "\n";
        trace << "epoch,train_mse,val_mse\n";
        for (std::size_t e = 0; e < result.trace.size(); ++e) {
            trace << (e + 1) << ',' << eval::format_double(result.trace[e].train_mse)
                  << ',' << eval::format_double(result.trace[e].val_mse) << '\n';
        }
        log_line("[train] " + label + ": done (final train mse " +
                 eval::format_double(result.trace.back().train_mse) + ")");
    };

    const std::vector<std::string> errors =
        run_tasks(tasks, effective_jobs(cfg, overrides), train_one);

    std::string failures;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (errors[i].empty()) continue;
        failures += "\n  " + model::to_string(tasks[i].variant) + " fold " +
                    std::to_string(tasks[i].fold_index) + ": " + errors[i];
    }
    if (!failures.empty()) {
        throw TrainError("training failed for:" + failures);
    }
}

namespace {

// Per-variant metric tables over the selected folds, in fold order.
std::map<std::string, eval::MetricTable>
evaluate_tables(const config::RunConfig &cfg, const Dataset &dataset,
                const std::vector<int> &folds,
                const std::vector<model::Variant> &variants, bool raw_units) {
    const std::uint64_t hash = cfg.hash();

    std::vector<std::string> gaps;
    for (model::Variant v : variants) {
        for (int f : folds) {
            if (!std::filesystem::exists(checkpoint_path(cfg, v, f))) {
                gaps.push_back(model::to_string(v) + " fold " + std::to_string(f));
            }
        }
    }
    if (!gaps.empty()) {
        std::string msg = "missing checkpoints:";
        for (const std::string &g : gaps) msg += "\n  " + g;
        throw EvalError(msg);
    }

    std::map<std::string, eval::MetricTable> tables;
    for (model::Variant v : variants) {
        eval::MetricTable table;
        table.horizons = cfg.model.horizons;
        for (int f : folds) {
            const data::FoldSpec &fold =
                dataset.folds[static_cast<std::size_t>(f - 1)];
            const model::ModelConfig mcfg = cfg.model_for(v, f);
            const model::HybridModelParams params = checkpoint::load_model(
                checkpoint_path(cfg, v, f), mcfg, hash);
            const data::SubjectRecording &rec =
                find_recording(dataset, fold.test_subject);
            std::vector<data::WindowSample> test;
            for (const data::WindowSample &w : data::build_windows(
                     rec, mcfg.window_len, mcfg.horizons, cfg.stride)) {
                test.push_back(data::standardize(w, fold.stats));
            }
            table.subjects.push_back(
                raw_units ? eval::evaluate_subject_raw(params, test, fold.stats)
                          : eval::evaluate_subject(params, test));
        }
        tables[model::to_string(v)] = std::move(table);
    }
    return tables;
}

} // namespace

void run_evaluate(const config::RunConfig &cfg) {
    const Dataset dataset = load_dataset(cfg);
    const std::vector<int> folds = config::parse_fold_spec(
        cfg.folds_spec, static_cast<int>(dataset.folds.size()));
    const std::uint64_t hash = cfg.hash();
    const std::filesystem::path reports = cfg.out_dir / "reports";

    const auto tables =
        evaluate_tables(cfg, dataset, folds, cfg.variants, /*raw_units=*/false);
    eval::write_metrics_csv(reports / "metrics.csv", tables, hash);
    eval::write_per_subject_csv(reports / "per_subject_metrics.csv", tables, hash);
    eval::write_avgwins_csv(reports / "avgwins.csv", eval::avg_wins(tables), hash);
    log_line("[evaluate] wrote " + (reports / "metrics.csv").string());

    if (cfg.raw_units) {
        const auto raw =
            evaluate_tables(cfg, dataset, folds, cfg.variants, /*raw_units=*/true);
        eval::write_metrics_csv(reports / "metrics_raw.csv", raw, hash);
        eval::write_per_subject_csv(reports / "per_subject_metrics_raw.csv", raw,
                                    hash);
        log_line("[evaluate] wrote " + (reports / "metrics_raw.csv").string());
    }
}

void run_ablate(const config::RunConfig &cfg, data::CorruptionSpec::Kind kind) {
    const Dataset dataset = load_dataset(cfg);
    const std::vector<int> folds = config::parse_fold_spec(
        cfg.folds_spec, static_cast<int>(dataset.folds.size()));
    const std::uint64_t hash = cfg.hash();

    const bool noise = kind == data::CorruptionSpec::Kind::gaussian_noise;
    const std::string kind_name = noise ? "noise" : "missing";
    const std::vector<double> &levels =
        noise ? cfg.corruptions.noise_sigmas : cfg.corruptions.missing_rates;

    // The sweep compares the hybrid model against its quantum-free ablation.
    const std::vector<model::Variant> variants = {model::Variant::hybrid,
                                                  model::Variant::gru_only};

    std::vector<data::CorruptionSpec> specs;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        specs.push_back({kind, levels[i],
                         mix_seed(mix_seed(cfg.corruptions.seed, kind_name),
                                  static_cast<std::uint64_t>(i))});
    }

    std::vector<eval::RobustnessRow> rows;
    for (model::Variant v : variants) {
        // Mean over held-out subjects, one sweep per fold.
        std::vector<double> mae_sum(levels.size(), 0.0);
        std::vector<double> rmse_sum(levels.size(), 0.0);
        for (int f : folds) {
            const std::filesystem::path path = checkpoint_path(cfg, v, f);
            if (!std::filesystem::exists(path)) {
                throw EvalError("missing checkpoint: " + model::to_string(v) +
                                " fold " + std::to_string(f));
            }
            const data::FoldSpec &fold =
                dataset.folds[static_cast<std::size_t>(f - 1)];
            const model::ModelConfig mcfg = cfg.model_for(v, f);
            const model::HybridModelParams params =
                checkpoint::load_model(path, mcfg, hash);
            const data::SubjectRecording &rec =
                find_recording(dataset, fold.test_subject);
            std::vector<data::WindowSample> test;
            for (const data::WindowSample &w : data::build_windows(
                     rec, mcfg.window_len, mcfg.horizons, cfg.stride)) {
                test.push_back(data::standardize(w, fold.stats));
            }
            const std::vector<eval::RobustnessPoint> points =
                eval::robustness_sweep(params, test, specs);
            for (std::size_t i = 0; i < points.size(); ++i) {
                mae_sum[i] += points[i].macro_mae;
                rmse_sum[i] += points[i].macro_rmse;
            }
        }
        for (std::size_t i = 0; i < levels.size(); ++i) {
            rows.push_back({model::to_string(v), kind_name, levels[i],
                            mae_sum[i] / static_cast<double>(folds.size()),
                            rmse_sum[i] / static_cast<double>(folds.size())});
        }
    }

    const std::filesystem::path out =
        cfg.out_dir / "reports" / ("robustness_" + kind_name + ".csv");
    eval::write_robustness_csv(out, rows, hash);
    log_line("[ablate] wrote " + out.string());
}

void run_rank(const config::RunConfig &cfg) {
    if (cfg.variants.size() < 2) {
        throw ConfigError("ranking needs at least two variants in the config");
    }
    const std::filesystem::path per_subject =
        cfg.out_dir / "reports" / "per_subject_metrics.csv";
    if (!std::filesystem::exists(per_subject)) {
        throw EvalError("'" + per_subject.string() +
                        "' not found; run evaluate first");
    }
    const auto tables = eval::read_per_subject_csv(per_subject, cfg.hash());
    if (tables.size() < 2) {
        throw ConfigError("ranking needs evaluation tables for at least two models");
    }
    const auto scores = eval::all_rank_scores(tables);
    const std::filesystem::path out = cfg.out_dir / "reports" / "ranking.csv";
    eval::write_ranking_csv(out, scores, cfg.hash());
    log_line("[rank] wrote " + out.string());
}

} // namespace vqcast::pipeline
