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

#include "vqcast/data.hpp"

namespace vqcast::synth {

// Synthetic 1 Hz vital-sign corpus for demos and tests: per-subject
// baselines, slow oscillations and AR(1) wander, with the pulse channel
// tightly coupled to heart rate. Useful for exercising the pipeline
// end-to-end; not a substitute for real recordings.

data::SubjectRecording make_recording(const std::string &subject_id, int seconds,
                                      std::uint64_t seed);

std::vector<data::SubjectRecording> make_corpus(int n_subjects, int seconds,
                                                std::uint64_t seed);

/// Writes one CSV per subject plus manifest.csv into `dir`; returns the
/// manifest path.
std::filesystem::path write_corpus_csv(const std::filesystem::path &dir,
                                       int n_subjects, int seconds,
                                       std::uint64_t seed);

} // namespace vqcast::synth
