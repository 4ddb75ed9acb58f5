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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vqcast/nn.hpp"
#include "vqcast/quantum.hpp"

namespace vqcast::model {

inline constexpr int kNumTasks = 4;

enum class Variant { hybrid, gru_only, lstm_baseline };

std::string to_string(Variant v);
Variant variant_from_string(const std::string &name);

struct ModelConfig {
    Variant variant = Variant::hybrid;
    int input_size = kNumTasks;
    int hidden_size = 56;
    int n_qubits = 6;
    int depth = 3;
    bool entanglement = true;
    int window_len = 240;
    std::vector<int> horizons = {15, 30, 60};
    int epochs = 30;
    int batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;

    int num_horizons() const { return static_cast<int>(horizons.size()); }
    /// Width of the per-window feature vector fed to the heads:
    /// hidden_size, plus n_qubits for the hybrid variant.
    int feature_size() const;
    int max_horizon() const;

    /// Throws ConfigError on invalid combinations (e.g. a hybrid model
    /// without qubits, or horizons that are not strictly increasing).
    void validate() const;
};

/// All trainable tensors of one model instance. Only the tensors of the
/// active variant are populated: the encoder (GRU or LSTM), and for the
/// hybrid variant the angle projection and the circuit rotations, plus one
/// linear head per horizon.
struct HybridModelParams {
    ModelConfig config;
    nn::GruParams gru;
    nn::LstmParams lstm;
    nn::LinearParams projection;           // n_qubits x hidden_size
    std::vector<Eigen::MatrixXd> omega;    // depth entries, n_qubits x 3
    std::vector<nn::LinearParams> heads;   // kNumTasks x feature_size each

    bool uses_gru() const { return config.variant != Variant::lstm_baseline; }
    bool is_hybrid() const { return config.variant == Variant::hybrid; }

    quantum::CircuitParams circuit_for(const Eigen::VectorXd &theta) const;
};

struct HybridModelGrad {
    nn::GruGrad gru;
    nn::LstmGrad lstm;
    nn::LinearGrad projection;
    std::vector<Eigen::MatrixXd> omega;
    std::vector<nn::LinearGrad> heads;

    static HybridModelGrad zeros_like(const HybridModelParams &p);
};

/// Parameter/gradient views in a fixed order, for the optimizer.
std::vector<nn::ParamRef> collect_param_refs(HybridModelParams &params,
                                             const HybridModelGrad &grad);

/// Seeded initialization: affine weights uniform in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)] with zero biases, circuit rotations
/// uniform in [-pi, pi].
HybridModelParams init_params(const ModelConfig &config);

/// Intermediate activations of one batched forward pass.
struct BatchForward {
    nn::GruCache gru_cache;
    nn::LstmCache lstm_cache;
    Eigen::MatrixXd hidden;    // B x hidden_size
    Eigen::MatrixXd theta;     // B x n_qubits (hybrid only)
    Eigen::MatrixXd readout;   // B x n_qubits (hybrid only)
    Eigen::MatrixXd features;  // B x feature_size
    Eigen::MatrixXd pred;      // B x (num_horizons * kNumTasks), col = h*4+task
};

/// Encoder -> (projection -> circuit readout) -> concatenation -> heads.
/// Each window must be window_len x input_size.
BatchForward forward_batch(const HybridModelParams &params,
                           std::span<const Eigen::MatrixXd> windows);

/// Reverse pass through heads, concatenation split, circuit, projection
/// and encoder. `dpred` matches BatchForward::pred. Gradients are
/// accumulated into `grad`.
void backward_batch(const HybridModelParams &params, const BatchForward &fwd,
                    const Eigen::MatrixXd &dpred, HybridModelGrad &grad);

/// Single-window forward; returns the num_horizons x kNumTasks prediction
/// matrix (row per horizon, column per task).
Eigen::MatrixXd forward(const HybridModelParams &params,
                        const Eigen::MatrixXd &window);

/// Single-window end-to-end gradients of the mean-squared error against
/// `target` (num_horizons x kNumTasks). Returns the loss.
double backward(const HybridModelParams &params, const Eigen::MatrixXd &window,
                const Eigen::MatrixXd &target, HybridModelGrad &grad);

/// Batched prediction, identical to looping `forward` per window. Returns
/// one num_horizons x kNumTasks matrix per window.
std::vector<Eigen::MatrixXd> predict_batch(const HybridModelParams &params,
                                           std::span<const Eigen::MatrixXd> windows);

/// Reshapes a flat prediction row (col = h*4+task) into horizons x tasks.
Eigen::MatrixXd unflatten_prediction(const Eigen::RowVectorXd &row, int num_horizons);
Eigen::RowVectorXd flatten_target(const Eigen::MatrixXd &target);

struct TrainSet {
    std::vector<Eigen::MatrixXd> x;  // window_len x input_size each
    std::vector<Eigen::MatrixXd> y;  // num_horizons x kNumTasks each
    std::size_t size() const { return x.size(); }
};

struct EpochStats {
    double train_mse;
    double val_mse;  // NaN when no validation windows were supplied
};

struct TrainResult {
    HybridModelParams params;
    std::vector<EpochStats> trace;
};

/// Shuffled mini-batch Adam on the mean-squared error for config.epochs
/// epochs. Deterministic given config.seed. The validation set is only
/// monitored, never optimized against. Throws ConfigError on an empty
/// training set and TrainError on a non-finite loss.
TrainResult train_fold(const ModelConfig &config, const TrainSet &train,
                       const TrainSet &val);

} // namespace vqcast::model
