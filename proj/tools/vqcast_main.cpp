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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vqcast/common.hpp"
#include "vqcast/pipeline.hpp"
#include "vqcast/synth.hpp"

namespace {

// Exit codes: 0 success, 1 unexpected, 2 configuration, 3 ingestion,
// 4 training, 5 evaluation.
constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitTrain = 4;
constexpr int kExitEval = 5;

int run(int argc, char **argv) {
    using namespace vqcast;

    CLI::App app{"Hybrid recurrent-quantum forecaster for 1 Hz vital signs"};
    app.require_subcommand(1);

    // ingest
    std::string ingest_manifest;
    std::string ingest_report;
    int ingest_min_seconds = 300;
    CLI::App *ingest = app.add_subcommand(
        "ingest", "Validate a dataset manifest and write an ingestion report");
    ingest->add_option("--manifest", ingest_manifest, "Manifest CSV path")
        ->required();
    ingest->add_option("--report", ingest_report,
                       "Where to write the JSON report");
    ingest->add_option("--min-seconds", ingest_min_seconds,
                       "Minimum accepted recording length");

    // train
    std::string train_config;
    std::string train_folds;
    std::string train_variants;
    int train_jobs = -1;
    CLI::App *train = app.add_subcommand("train", "Train per-fold checkpoints");
    train->add_option("--config", train_config, "Run config (JSON)")->required();
    train->add_option("--folds", train_folds, "Fold subset, e.g. 1-5 or 1,3");
    train->add_option("--variant", train_variants,
                      "Comma list: hybrid,gru_only,lstm");
    train->add_option("--jobs", train_jobs, "Parallel fold tasks");

    // evaluate
    std::string eval_config;
    CLI::App *evaluate =
        app.add_subcommand("evaluate", "Compute metric tables and AvgWins");
    evaluate->add_option("--config", eval_config, "Run config (JSON)")->required();

    // ablate
    std::string ablate_config;
    std::string ablate_kind;
    CLI::App *ablate = app.add_subcommand(
        "ablate", "Test-time robustness sweep (hybrid vs gru_only)");
    ablate->add_option("--config", ablate_config, "Run config (JSON)")->required();
    ablate->add_option("--kind", ablate_kind, "noise or missing")
        ->required()
        ->check(CLI::IsMember({"noise", "missing"}));

    // rank
    std::string rank_config;
    CLI::App *rank =
        app.add_subcommand("rank", "Patient-wise normalized ranking scores");
    rank->add_option("--config", rank_config, "Run config (JSON)")->required();

    // synth (demo corpus helper)
    std::string synth_out;
    int synth_subjects = 53;
    int synth_seconds = 480;
    std::uint64_t synth_seed = 7;
    CLI::App *synth = app.add_subcommand(
        "synth", "Generate a synthetic 1 Hz corpus with a manifest");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--subjects", synth_subjects, "Subject count");
    synth->add_option("--seconds", synth_seconds, "Seconds per subject");
    synth->add_option("--seed", synth_seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    if (ingest->parsed()) {
        std::optional<std::filesystem::path> report;
        if (!ingest_report.empty()) report = ingest_report;
        const pipeline::IngestOutcome outcome =
            pipeline::run_ingest(ingest_manifest, report, ingest_min_seconds);
        std::cout << outcome.report.dump(2) << "\n";
        if (!outcome.ok) {
            std::cerr << "error: " << outcome.report["n_rejected"]
                      << " subject(s) rejected\n";
            return kExitIngest;
        }
        return 0;
    }
    if (train->parsed()) {
        const config::RunConfig cfg = config::RunConfig::load(train_config);
        pipeline::TrainOverrides overrides;
        if (!train_folds.empty()) overrides.folds_spec = train_folds;
        if (!train_variants.empty()) {
            overrides.variants = config::parse_variant_list(train_variants);
        }
        if (train_jobs >= 0) overrides.jobs = train_jobs;
        pipeline::run_train(cfg, overrides);
        return 0;
    }
    if (evaluate->parsed()) {
        pipeline::run_evaluate(config::RunConfig::load(eval_config));
        return 0;
    }
    if (ablate->parsed()) {
        pipeline::run_ablate(config::RunConfig::load(ablate_config),
                             ablate_kind == "noise"
                                 ? data::CorruptionSpec::Kind::gaussian_noise
                                 : data::CorruptionSpec::Kind::missing);
        return 0;
    }
    if (rank->parsed()) {
        pipeline::run_rank(config::RunConfig::load(rank_config));
        return 0;
    }
    if (synth->parsed()) {
        const std::filesystem::path manifest = synth::write_corpus_csv(
            synth_out, synth_subjects, synth_seconds, synth_seed);
        std::cout << manifest.string() << "\n";
        return 0;
    }
    return 1;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const vqcast::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const vqcast::IngestError &e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const vqcast::TrainError &e) {
        std::cerr << "train error: " << e.what() << "\n";
        return kExitTrain;
    } catch (const vqcast::EvalError &e) {
        std::cerr << "eval error: " << e.what() << "\n";
        return kExitEval;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
