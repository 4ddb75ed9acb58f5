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

#include "vqcast/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vqcast/common.hpp"

namespace vqcast::checkpoint {

namespace {

constexpr char kMagic[8] = {'V', 'Q', 'C', 'A', 'S', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(double) == 8, "requires IEEE-754 64-bit doubles");

template <typename T> void write_pod(std::ostream &out, T v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T> T read_pod(std::istream &in, const std::string &what) {
    T v{};
    if (!in.read(reinterpret_cast<char *>(&v), sizeof(T))) {
        throw EvalError("truncated checkpoint while reading " + what);
    }
    return v;
}

} // namespace

const Eigen::MatrixXd &Container::get(const std::string &name) const {
    for (const NamedTensor &t : tensors) {
        if (t.name == name) return t.value;
    }
    throw EvalError("checkpoint is missing tensor '" + name + "'");
}

bool Container::has(const std::string &name) const {
    for (const NamedTensor &t : tensors) {
        if (t.name == name) return true;
    }
    return false;
}

void save(const std::filesystem::path &path, std::span<const NamedTensor> tensors,
          std::uint64_t config_hash) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TrainError("cannot write checkpoint '" + path.string() + "'");

    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint64_t>(out, config_hash);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor &t : tensors) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rows()));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.cols()));
        for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
                write_pod<double>(out, t.value(r, c));
            }
        }
    }
    if (!out) throw TrainError("failed writing checkpoint '" + path.string() + "'");
}

Container load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EvalError("cannot read checkpoint '" + path.string() + "'");

    char magic[8];
    if (!in.read(magic, sizeof(magic)) ||
        std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw EvalError("'" + path.string() + "' is not a vqcast checkpoint");
    }
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion) {
        throw EvalError("unsupported checkpoint version " + std::to_string(version));
    }

    Container c;
    c.config_hash = read_pod<std::uint64_t>(in, "config hash");
    const auto count = read_pod<std::uint32_t>(in, "entry count");
    c.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const auto name_len = read_pod<std::uint32_t>(in, "name length");
        t.name.resize(name_len);
        if (!in.read(t.name.data(), name_len)) {
            throw EvalError("truncated checkpoint while reading a tensor name");
        }
        const auto rows = read_pod<std::uint32_t>(in, "rows");
        const auto cols = read_pod<std::uint32_t>(in, "cols");
        t.value.resize(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t col = 0; col < cols; ++col) {
                t.value(r, col) = read_pod<double>(in, "tensor data");
            }
        }
        c.tensors.push_back(std::move(t));
    }
    return c;
}

std::uint64_t peek_config_hash(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EvalError("cannot read checkpoint '" + path.string() + "'");
    char magic[8];
    if (!in.read(magic, sizeof(magic)) ||
        std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw EvalError("'" + path.string() + "' is not a vqcast checkpoint");
    }
    read_pod<std::uint32_t>(in, "version");
    return read_pod<std::uint64_t>(in, "config hash");
}

namespace {

Eigen::MatrixXd scalar(double v) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = v;
    return m;
}

void push_linear(std::vector<NamedTensor> &out, const std::string &prefix,
                 const nn::LinearParams &p) {
    out.push_back({prefix + ".weight", p.weight});
    out.push_back({prefix + ".bias", p.bias});
}

nn::LinearParams pull_linear(const Container &c, const std::string &prefix) {
    return {c.get(prefix + ".weight"), c.get(prefix + ".bias")};
}

} // namespace

void save_model(const std::filesystem::path &path,
                const model::HybridModelParams &params,
                std::uint64_t config_hash) {
    const model::ModelConfig &cfg = params.config;
    std::vector<NamedTensor> tensors;
    tensors.push_back({"meta.variant",
                       scalar(static_cast<double>(static_cast<int>(cfg.variant)))});
    tensors.push_back({"meta.input_size", scalar(cfg.input_size)});
    tensors.push_back({"meta.hidden_size", scalar(cfg.hidden_size)});
    tensors.push_back({"meta.n_qubits", scalar(cfg.n_qubits)});
    tensors.push_back({"meta.depth", scalar(cfg.depth)});
    tensors.push_back({"meta.entanglement", scalar(cfg.entanglement ? 1.0 : 0.0)});
    tensors.push_back({"meta.window_len", scalar(cfg.window_len)});
    Eigen::MatrixXd horizons(static_cast<Eigen::Index>(cfg.horizons.size()), 1);
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        horizons(static_cast<Eigen::Index>(h), 0) = cfg.horizons[h];
    }
    tensors.push_back({"meta.horizons", std::move(horizons)});

    if (params.uses_gru()) {
        tensors.push_back({"gru.w_update", params.gru.w_update});
        tensors.push_back({"gru.u_update", params.gru.u_update});
        tensors.push_back({"gru.b_update", params.gru.b_update});
        tensors.push_back({"gru.w_reset", params.gru.w_reset});
        tensors.push_back({"gru.u_reset", params.gru.u_reset});
        tensors.push_back({"gru.b_reset", params.gru.b_reset});
        tensors.push_back({"gru.w_cand", params.gru.w_cand});
        tensors.push_back({"gru.u_cand", params.gru.u_cand});
        tensors.push_back({"gru.b_cand", params.gru.b_cand});
    } else {
        tensors.push_back({"lstm.w_input", params.lstm.w_input});
        tensors.push_back({"lstm.u_input", params.lstm.u_input});
        tensors.push_back({"lstm.b_input", params.lstm.b_input});
        tensors.push_back({"lstm.w_forget", params.lstm.w_forget});
        tensors.push_back({"lstm.u_forget", params.lstm.u_forget});
        tensors.push_back({"lstm.b_forget", params.lstm.b_forget});
        tensors.push_back({"lstm.w_output", params.lstm.w_output});
        tensors.push_back({"lstm.u_output", params.lstm.u_output});
        tensors.push_back({"lstm.b_output", params.lstm.b_output});
        tensors.push_back({"lstm.w_cell", params.lstm.w_cell});
        tensors.push_back({"lstm.u_cell", params.lstm.u_cell});
        tensors.push_back({"lstm.b_cell", params.lstm.b_cell});
    }
    if (params.is_hybrid()) {
        push_linear(tensors, "proj", params.projection);
        for (std::size_t l = 0; l < params.omega.size(); ++l) {
            tensors.push_back({"omega." + std::to_string(l), params.omega[l]});
        }
    }
    for (std::size_t h = 0; h < params.heads.size(); ++h) {
        push_linear(tensors,
                    "head." + std::to_string(params.config.horizons[h]),
                    params.heads[h]);
    }
    save(path, tensors, config_hash);
}

model::HybridModelParams load_model(const std::filesystem::path &path,
                                    const model::ModelConfig &expected,
                                    std::uint64_t expected_hash) {
    const Container c = load(path);
    if (c.config_hash != expected_hash) {
        throw EvalError("checkpoint '" + path.string() +
                        "' was produced by a different config");
    }

    auto meta = [&](const std::string &name) { return c.get("meta." + name)(0, 0); };
    if (static_cast<int>(meta("variant")) != static_cast<int>(expected.variant) ||
        static_cast<int>(meta("hidden_size")) != expected.hidden_size ||
        static_cast<int>(meta("window_len")) != expected.window_len ||
        static_cast<int>(meta("input_size")) != expected.input_size) {
        throw EvalError("checkpoint '" + path.string() +
                        "' stores a different architecture");
    }
    const Eigen::MatrixXd &horizons = c.get("meta.horizons");
    if (horizons.rows() != static_cast<Eigen::Index>(expected.horizons.size())) {
        throw EvalError("checkpoint horizon count mismatch");
    }
    for (std::size_t h = 0; h < expected.horizons.size(); ++h) {
        if (static_cast<int>(horizons(static_cast<Eigen::Index>(h), 0)) !=
            expected.horizons[h]) {
            throw EvalError("checkpoint horizon values mismatch");
        }
    }

    model::HybridModelParams p;
    p.config = expected;
    if (p.uses_gru()) {
        p.gru.w_update = c.get("gru.w_update");
        p.gru.u_update = c.get("gru.u_update");
        p.gru.b_update = c.get("gru.b_update");
        p.gru.w_reset = c.get("gru.w_reset");
        p.gru.u_reset = c.get("gru.u_reset");
        p.gru.b_reset = c.get("gru.b_reset");
        p.gru.w_cand = c.get("gru.w_cand");
        p.gru.u_cand = c.get("gru.u_cand");
        p.gru.b_cand = c.get("gru.b_cand");
    } else {
        p.lstm.w_input = c.get("lstm.w_input");
        p.lstm.u_input = c.get("lstm.u_input");
        p.lstm.b_input = c.get("lstm.b_input");
        p.lstm.w_forget = c.get("lstm.w_forget");
        p.lstm.u_forget = c.get("lstm.u_forget");
        p.lstm.b_forget = c.get("lstm.b_forget");
        p.lstm.w_output = c.get("lstm.w_output");
        p.lstm.u_output = c.get("lstm.u_output");
        p.lstm.b_output = c.get("lstm.b_output");
        p.lstm.w_cell = c.get("lstm.w_cell");
        p.lstm.u_cell = c.get("lstm.u_cell");
        p.lstm.b_cell = c.get("lstm.b_cell");
    }
    if (p.is_hybrid()) {
        if (static_cast<int>(meta("n_qubits")) != expected.n_qubits ||
            static_cast<int>(meta("depth")) != expected.depth ||
            (meta("entanglement") != 0.0) != expected.entanglement) {
            throw EvalError("checkpoint circuit settings mismatch");
        }
        p.projection = pull_linear(c, "proj");
        p.omega.resize(static_cast<std::size_t>(expected.depth));
        for (int l = 0; l < expected.depth; ++l) {
            p.omega[static_cast<std::size_t>(l)] =
                c.get("omega." + std::to_string(l));
        }
    }
    for (int h : expected.horizons) {
        p.heads.push_back(pull_linear(c, "head." + std::to_string(h)));
    }

    // Shape sanity after assembly.
    if (p.heads[0].in_features() != expected.feature_size()) {
        throw EvalError("checkpoint head width mismatch");
    }
    return p;
}

} // namespace vqcast::checkpoint
