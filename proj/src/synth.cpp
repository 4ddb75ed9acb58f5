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

#include "vqcast/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "vqcast/common.hpp"

namespace vqcast::synth {

namespace {

double round1(double v) { return std::round(v * 10.0) / 10.0; }

} // namespace

data::SubjectRecording make_recording(const std::string &subject_id, int seconds,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, subject_id));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double hr_base = 60.0 + 35.0 * uni(rng);
    const double hr_amp = 1.0 + 3.0 * uni(rng);
    const double hr_period = 90.0 + 210.0 * uni(rng);
    const double hr_phase = 2.0 * std::numbers::pi * uni(rng);
    const double pulse_offset = -1.5 + 3.0 * uni(rng);
    const double spo2_base = 94.5 + 4.0 * uni(rng);
    const double rr_base = 12.0 + 10.0 * uni(rng);
    const double rr_amp = 0.5 + 1.5 * uni(rng);
    const double rr_period = 20.0 + 40.0 * uni(rng);
    const double rr_phase = 2.0 * std::numbers::pi * uni(rng);

    // AR(1) wander per channel; pulse rides on heart rate.
    double hr_ar = 0.0, pulse_ar = 0.0, spo2_ar = 0.0, rr_ar = 0.0;
    const double phi = 0.97;

    data::SubjectRecording rec;
    rec.subject_id = subject_id;
    rec.series.resize(seconds, data::kNumChannels);
    for (int t = 0; t < seconds; ++t) {
        hr_ar = phi * hr_ar + 0.35 * gauss(rng);
        pulse_ar = phi * pulse_ar + 0.20 * gauss(rng);
        spo2_ar = phi * spo2_ar + 0.12 * gauss(rng);
        rr_ar = phi * rr_ar + 0.22 * gauss(rng);

        const double hr =
            hr_base +
            hr_amp * std::sin(2.0 * std::numbers::pi * t / hr_period + hr_phase) +
            hr_ar;
        const double pulse = hr + pulse_offset + pulse_ar;
        const double spo2 = std::min(100.0, spo2_base + spo2_ar);
        const double rr =
            rr_base +
            rr_amp * std::sin(2.0 * std::numbers::pi * t / rr_period + rr_phase) +
            rr_ar;

        rec.series(t, 0) = round1(hr);
        rec.series(t, 1) = round1(spo2);
        rec.series(t, 2) = round1(pulse);
        rec.series(t, 3) = round1(rr);
    }
    return rec;
}

std::vector<data::SubjectRecording> make_corpus(int n_subjects, int seconds,
                                                std::uint64_t seed) {
    std::vector<data::SubjectRecording> out;
    out.reserve(static_cast<std::size_t>(n_subjects));
    for (int i = 0; i < n_subjects; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "s%02d", i + 1);
        out.push_back(make_recording(id, seconds, seed));
    }
    return out;
}

std::filesystem::path write_corpus_csv(const std::filesystem::path &dir,
                                       int n_subjects, int seconds,
                                       std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const std::vector<data::SubjectRecording> corpus =
        make_corpus(n_subjects, seconds, seed);

    const std::filesystem::path manifest = dir / "manifest.csv";
    std::ofstream mout(manifest);
    if (!mout) throw IngestError("cannot write '" + manifest.string() + "'");
    mout << "subject_id,path\n";

    for (const data::SubjectRecording &rec : corpus) {
        const std::string filename = rec.subject_id + ".csv";
        std::ofstream out(dir / filename);
        if (!out) throw IngestError("cannot write '" + filename + "'");
        out << "Time [s], HR, PULSE, RESP, SpO2\n";
        for (int t = 0; t < rec.seconds(); ++t) {
            char line[160];
            std::snprintf(line, sizeof(line), "%d,%.1f,%.1f,%.1f,%.1f\n", t,
                          rec.series(t, 0), rec.series(t, 2), rec.series(t, 3),
                          rec.series(t, 1));
            out << line;
        }
        mout << rec.subject_id << ',' << filename << '\n';
    }
    return manifest;
}

} // namespace vqcast::synth
