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

#include "vqcast/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "vqcast/common.hpp"

namespace vqcast::model {

std::string to_string(Variant v) {
    switch (v) {
    case Variant::hybrid: return "hybrid";
    case Variant::gru_only: return "gru_only";
    case Variant::lstm_baseline: return "lstm";
    }
    throw std::logic_error("unknown variant");
}

Variant variant_from_string(const std::string &name) {
    if (name == "hybrid") return Variant::hybrid;
    if (name == "gru_only") return Variant::gru_only;
    if (name == "lstm" || name == "lstm_baseline") return Variant::lstm_baseline;
    throw ConfigError("unknown model variant '" + name +
                      "' (expected hybrid, gru_only or lstm)");
}

int ModelConfig::feature_size() const {
    return hidden_size + (variant == Variant::hybrid ? n_qubits : 0);
}

int ModelConfig::max_horizon() const {
    return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
}

void ModelConfig::validate() const {
    if (input_size < 1) throw ConfigError("input_size must be positive");
    if (hidden_size < 1) throw ConfigError("hidden_size must be positive");
    if (window_len < 1) throw ConfigError("window_len must be positive");
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (horizons.empty()) throw ConfigError("at least one horizon is required");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] < 1) throw ConfigError("horizons must be positive");
        if (i > 0 && horizons[i] <= horizons[i - 1]) {
            throw ConfigError("horizons must be strictly increasing");
        }
    }
    if (variant == Variant::hybrid) {
        if (n_qubits < 1) throw ConfigError("hybrid variant requires n_qubits >= 1");
        if (n_qubits > 20) throw ConfigError("n_qubits capped at 20");
        if (depth < 0) throw ConfigError("depth must be non-negative");
        if (entanglement && depth > 0 && n_qubits < 2) {
            throw ConfigError("ring entanglement requires at least 2 qubits");
        }
    }
}

quantum::CircuitParams
HybridModelParams::circuit_for(const Eigen::VectorXd &theta) const {
    quantum::CircuitParams c;
    c.theta = theta;
    c.omega = omega;
    c.entanglement = config.entanglement;
    return c;
}

HybridModelGrad HybridModelGrad::zeros_like(const HybridModelParams &p) {
    HybridModelGrad g;
    if (p.uses_gru()) {
        g.gru = nn::GruGrad::zeros_like(p.gru);
    } else {
        g.lstm = nn::LstmGrad::zeros_like(p.lstm);
    }
    if (p.is_hybrid()) {
        g.projection = nn::LinearGrad::zeros_like(p.projection);
        g.omega.reserve(p.omega.size());
        for (const Eigen::MatrixXd &w : p.omega) {
            g.omega.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        }
    }
    g.heads.reserve(p.heads.size());
    for (const nn::LinearParams &h : p.heads) {
        g.heads.push_back(nn::LinearGrad::zeros_like(h));
    }
    return g;
}

std::vector<nn::ParamRef> collect_param_refs(HybridModelParams &params,
                                             const HybridModelGrad &grad) {
    std::vector<nn::ParamRef> refs;
    if (params.uses_gru()) {
        grad.gru.add_refs(refs, params.gru);
    } else {
        grad.lstm.add_refs(refs, params.lstm);
    }
    if (params.is_hybrid()) {
        grad.projection.add_refs(refs, params.projection);
        for (std::size_t l = 0; l < params.omega.size(); ++l) {
            refs.push_back({params.omega[l].data(), grad.omega[l].data(),
                            params.omega[l].size()});
        }
    }
    for (std::size_t h = 0; h < params.heads.size(); ++h) {
        grad.heads[h].add_refs(refs, params.heads[h]);
    }
    return refs;
}

HybridModelParams init_params(const ModelConfig &config) {
    config.validate();
    std::mt19937_64 rng(mix_seed(config.seed, "init"));

    HybridModelParams p;
    p.config = config;
    if (config.variant == Variant::lstm_baseline) {
        p.lstm = nn::make_lstm(config.input_size, config.hidden_size, rng);
    } else {
        p.gru = nn::make_gru(config.input_size, config.hidden_size, rng);
    }
    if (config.variant == Variant::hybrid) {
        p.projection = nn::make_linear(config.n_qubits, config.hidden_size, rng);
        std::uniform_real_distribution<double> angle(-std::numbers::pi,
                                                     std::numbers::pi);
        p.omega.resize(static_cast<std::size_t>(config.depth));
        for (Eigen::MatrixXd &w : p.omega) {
            w.resize(config.n_qubits, 3);
            for (int j = 0; j < config.n_qubits; ++j) {
                for (int k = 0; k < 3; ++k) w(j, k) = angle(rng);
            }
        }
    }
    p.heads.reserve(config.horizons.size());
    for (std::size_t h = 0; h < config.horizons.size(); ++h) {
        p.heads.push_back(nn::make_linear(kNumTasks, config.feature_size(), rng));
    }
    return p;
}

BatchForward forward_batch(const HybridModelParams &params,
                           std::span<const Eigen::MatrixXd> windows) {
    const ModelConfig &cfg = params.config;
    BatchForward f;
    if (params.uses_gru()) {
        f.gru_cache = nn::gru_forward_batch(params.gru, windows);
        f.hidden = f.gru_cache.h_final;
    } else {
        f.lstm_cache = nn::lstm_forward_batch(params.lstm, windows);
        f.hidden = f.lstm_cache.h_final;
    }
    const Eigen::Index batch = f.hidden.rows();

    if (params.is_hybrid()) {
        f.theta = nn::linear_forward_batch(params.projection, f.hidden);
        f.readout.resize(batch, cfg.n_qubits);
        for (Eigen::Index b = 0; b < batch; ++b) {
            const Eigen::VectorXd q =
                quantum::circuit_readout(params.circuit_for(f.theta.row(b).transpose()));
            f.readout.row(b) = q.transpose();
        }
        f.features.resize(batch, cfg.feature_size());
        f.features << f.hidden, f.readout;
    } else {
        f.features = f.hidden;
    }

    f.pred.resize(batch, cfg.num_horizons() * kNumTasks);
    for (int h = 0; h < cfg.num_horizons(); ++h) {
        f.pred.middleCols(h * kNumTasks, kNumTasks) = nn::linear_forward_batch(
            params.heads[static_cast<std::size_t>(h)], f.features);
    }
    return f;
}

void backward_batch(const HybridModelParams &params, const BatchForward &fwd,
                    const Eigen::MatrixXd &dpred, HybridModelGrad &grad) {
    const ModelConfig &cfg = params.config;
    const Eigen::Index batch = fwd.pred.rows();
    if (dpred.rows() != batch || dpred.cols() != fwd.pred.cols()) {
        throw std::invalid_argument("prediction gradient shape mismatch");
    }

    Eigen::MatrixXd dfeat = Eigen::MatrixXd::Zero(batch, cfg.feature_size());
    for (int h = 0; h < cfg.num_horizons(); ++h) {
        dfeat += nn::linear_backward_batch(
            params.heads[static_cast<std::size_t>(h)], fwd.features,
            dpred.middleCols(h * kNumTasks, kNumTasks),
            grad.heads[static_cast<std::size_t>(h)]);
    }

    Eigen::MatrixXd dhidden;
    if (params.is_hybrid()) {
        dhidden = dfeat.leftCols(cfg.hidden_size);
        const Eigen::MatrixXd dreadout = dfeat.rightCols(cfg.n_qubits);
        Eigen::MatrixXd dtheta(batch, cfg.n_qubits);
        for (Eigen::Index b = 0; b < batch; ++b) {
            const quantum::CircuitGrad cg = quantum::circuit_backward(
                params.circuit_for(fwd.theta.row(b).transpose()),
                dreadout.row(b).transpose());
            dtheta.row(b) = cg.theta.transpose();
            for (std::size_t l = 0; l < grad.omega.size(); ++l) {
                grad.omega[l] += cg.omega[l];
            }
        }
        dhidden += nn::linear_backward_batch(params.projection, fwd.hidden, dtheta,
                                             grad.projection);
    } else {
        dhidden = dfeat;
    }

    if (params.uses_gru()) {
        nn::gru_backward(params.gru, fwd.gru_cache, dhidden, grad.gru);
    } else {
        nn::lstm_backward(params.lstm, fwd.lstm_cache, dhidden, grad.lstm);
    }
}

Eigen::MatrixXd unflatten_prediction(const Eigen::RowVectorXd &row,
                                     int num_horizons) {
    Eigen::MatrixXd out(num_horizons, kNumTasks);
    for (int h = 0; h < num_horizons; ++h) {
        out.row(h) = row.segment(h * kNumTasks, kNumTasks);
    }
    return out;
}

Eigen::RowVectorXd flatten_target(const Eigen::MatrixXd &target) {
    Eigen::RowVectorXd row(target.rows() * target.cols());
    for (Eigen::Index h = 0; h < target.rows(); ++h) {
        row.segment(h * target.cols(), target.cols()) = target.row(h);
    }
    return row;
}

Eigen::MatrixXd forward(const HybridModelParams &params,
                        const Eigen::MatrixXd &window) {
    const BatchForward f =
        forward_batch(params, std::span<const Eigen::MatrixXd>(&window, 1));
    return unflatten_prediction(f.pred.row(0), params.config.num_horizons());
}

double backward(const HybridModelParams &params, const Eigen::MatrixXd &window,
                const Eigen::MatrixXd &target, HybridModelGrad &grad) {
    const BatchForward f =
        forward_batch(params, std::span<const Eigen::MatrixXd>(&window, 1));
    const auto [loss, dflat] = nn::mse_loss(f.pred, flatten_target(target));
    backward_batch(params, f, dflat, grad);
    return loss;
}

std::vector<Eigen::MatrixXd> predict_batch(const HybridModelParams &params,
                                           std::span<const Eigen::MatrixXd> windows) {
    // Chunked to bound the recurrent cache memory.
    constexpr std::size_t kChunk = 256;
    std::vector<Eigen::MatrixXd> out;
    out.reserve(windows.size());
    for (std::size_t start = 0; start < windows.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, windows.size() - start);
        const BatchForward f =
            forward_batch(params, windows.subspan(start, count));
        for (std::size_t b = 0; b < count; ++b) {
            out.push_back(unflatten_prediction(
                f.pred.row(static_cast<Eigen::Index>(b)),
                params.config.num_horizons()));
        }
    }
    return out;
}

namespace {

double evaluate_mse(const HybridModelParams &params, const TrainSet &set,
                    int chunk_size) {
    if (set.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    double sse = 0.0;
    double count = 0.0;
    const std::span<const Eigen::MatrixXd> xs(set.x);
    for (std::size_t start = 0; start < set.size();
         start += static_cast<std::size_t>(chunk_size)) {
        const std::size_t n =
            std::min(static_cast<std::size_t>(chunk_size), set.size() - start);
        const BatchForward f = forward_batch(params, xs.subspan(start, n));
        for (std::size_t b = 0; b < n; ++b) {
            const Eigen::RowVectorXd t = flatten_target(set.y[start + b]);
            sse += (f.pred.row(static_cast<Eigen::Index>(b)) - t).squaredNorm();
            count += static_cast<double>(t.size());
        }
    }
    return sse / count;
}

} // namespace

TrainResult train_fold(const ModelConfig &config, const TrainSet &train,
                       const TrainSet &val) {
    config.validate();
    if (train.size() == 0) throw ConfigError("training set is empty");
    if (train.x.size() != train.y.size() || val.x.size() != val.y.size()) {
        throw std::invalid_argument("window/target count mismatch");
    }

    TrainResult result;
    result.params = init_params(config);
    HybridModelParams &params = result.params;

    nn::Adam opt({config.learning_rate});
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, "shuffle"));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<Eigen::MatrixXd> batch_x;
    std::vector<Eigen::MatrixXd> batch_y;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sse = 0.0;
        double count = 0.0;
        for (std::size_t start = 0; start < train.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t n = std::min(
                static_cast<std::size_t>(config.batch_size), train.size() - start);
            batch_x.clear();
            batch_y.clear();
            Eigen::MatrixXd targets(static_cast<Eigen::Index>(n),
                                    config.num_horizons() * kNumTasks);
            for (std::size_t b = 0; b < n; ++b) {
                batch_x.push_back(train.x[order[start + b]]);
                targets.row(static_cast<Eigen::Index>(b)) =
                    flatten_target(train.y[order[start + b]]);
            }
            const BatchForward f = forward_batch(params, batch_x);
            const auto [loss, dpred] = nn::mse_loss(f.pred, targets);
            if (!std::isfinite(loss)) {
                throw TrainError("training loss became non-finite at epoch " +
                                 std::to_string(epoch + 1));
            }
            HybridModelGrad grad = HybridModelGrad::zeros_like(params);
            backward_batch(params, f, dpred, grad);
            opt.step(collect_param_refs(params, grad));
            sse += loss * static_cast<double>(targets.size());
            count += static_cast<double>(targets.size());
        }
        EpochStats stats;
        stats.train_mse = sse / count;
        stats.val_mse = evaluate_mse(params, val, config.batch_size);
        result.trace.push_back(stats);
    }
    return result;
}

} // namespace vqcast::model
