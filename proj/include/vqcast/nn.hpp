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

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vqcast::nn {

// Batches are row-major conceptually: one sample per row. All forward
// passes are deterministic functions of parameters and input, and every
// backward pass is the exact reverse-mode gradient of its forward.

/// Flat view of one trainable tensor and its gradient, in matching order.
struct ParamRef {
    double *value;
    const double *grad;
    Eigen::Index size;
};

// ---------------------------------------------------------------------------
// Linear layer: y = W x + b
// ---------------------------------------------------------------------------

struct LinearParams {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out

    int in_features() const { return static_cast<int>(weight.cols()); }
    int out_features() const { return static_cast<int>(weight.rows()); }
};

struct LinearGrad {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;

    static LinearGrad zeros_like(const LinearParams &p);
    void add_refs(std::vector<ParamRef> &out, LinearParams &p) const;
};

Eigen::VectorXd linear_forward(const LinearParams &p, const Eigen::VectorXd &x);
/// x is batch-major (B x in); returns B x out.
Eigen::MatrixXd linear_forward_batch(const LinearParams &p, const Eigen::MatrixXd &x);

/// Accumulates parameter gradients into `grad` and returns dL/dx.
Eigen::VectorXd linear_backward(const LinearParams &p, const Eigen::VectorXd &x,
                                const Eigen::VectorXd &dy, LinearGrad &grad);
Eigen::MatrixXd linear_backward_batch(const LinearParams &p, const Eigen::MatrixXd &x,
                                      const Eigen::MatrixXd &dy, LinearGrad &grad);

// ---------------------------------------------------------------------------
// GRU encoder (update/reset gates, candidate fed by the reset-gated state):
//   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
//   r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
//   c_t = tanh(W_c x_t + U_c (r_t . h_{t-1}) + b_c)
//   h_t = (1 - z_t) . h_{t-1} + z_t . c_t
// from h_0 = 0.
// ---------------------------------------------------------------------------

struct GruParams {
    Eigen::MatrixXd w_update, u_update;
    Eigen::VectorXd b_update;
    Eigen::MatrixXd w_reset, u_reset;
    Eigen::VectorXd b_reset;
    Eigen::MatrixXd w_cand, u_cand;
    Eigen::VectorXd b_cand;

    int input_size() const { return static_cast<int>(w_update.cols()); }
    int hidden_size() const { return static_cast<int>(w_update.rows()); }
};

struct GruGrad {
    Eigen::MatrixXd w_update, u_update;
    Eigen::VectorXd b_update;
    Eigen::MatrixXd w_reset, u_reset;
    Eigen::VectorXd b_reset;
    Eigen::MatrixXd w_cand, u_cand;
    Eigen::VectorXd b_cand;

    static GruGrad zeros_like(const GruParams &p);
    void add_refs(std::vector<ParamRef> &out, GruParams &p) const;
};

/// Per-step activations kept for the reverse pass.
struct GruCache {
    std::vector<Eigen::MatrixXd> x;       // B x d_x per step
    std::vector<Eigen::MatrixXd> h_prev;  // B x d_z per step
    std::vector<Eigen::MatrixXd> update, reset, cand;
    Eigen::MatrixXd h_final;              // B x d_z
    int steps() const { return static_cast<int>(x.size()); }
};

/// Runs the recurrence over a batch of windows (each window is L x d_x with
/// identical L). Row b of cache.h_final is the final hidden state of
/// windows[b].
GruCache gru_forward_batch(const GruParams &p,
                           std::span<const Eigen::MatrixXd> windows);

/// Single-window convenience; returns the final hidden state.
std::pair<Eigen::VectorXd, GruCache> gru_forward(const GruParams &p,
                                                 const Eigen::MatrixXd &window);

/// dh_final is B x d_z. Accumulates parameter gradients into `grad`,
/// returns dL/dx per step (B x d_x each). Throws std::logic_error when the
/// cache does not belong to these parameters.
std::vector<Eigen::MatrixXd> gru_backward(const GruParams &p, const GruCache &cache,
                                          const Eigen::MatrixXd &dh_final,
                                          GruGrad &grad);

// ---------------------------------------------------------------------------
// LSTM baseline cell:
//   i, f, o = sigmoid(...), g = tanh(...)
//   c_t = f . c_{t-1} + i . g,  h_t = o . tanh(c_t)
// from h_0 = c_0 = 0.
// ---------------------------------------------------------------------------

struct LstmParams {
    Eigen::MatrixXd w_input, u_input;
    Eigen::VectorXd b_input;
    Eigen::MatrixXd w_forget, u_forget;
    Eigen::VectorXd b_forget;
    Eigen::MatrixXd w_output, u_output;
    Eigen::VectorXd b_output;
    Eigen::MatrixXd w_cell, u_cell;
    Eigen::VectorXd b_cell;

    int input_size() const { return static_cast<int>(w_input.cols()); }
    int hidden_size() const { return static_cast<int>(w_input.rows()); }
};

struct LstmGrad {
    Eigen::MatrixXd w_input, u_input;
    Eigen::VectorXd b_input;
    Eigen::MatrixXd w_forget, u_forget;
    Eigen::VectorXd b_forget;
    Eigen::MatrixXd w_output, u_output;
    Eigen::VectorXd b_output;
    Eigen::MatrixXd w_cell, u_cell;
    Eigen::VectorXd b_cell;

    static LstmGrad zeros_like(const LstmParams &p);
    void add_refs(std::vector<ParamRef> &out, LstmParams &p) const;
};

struct LstmCache {
    std::vector<Eigen::MatrixXd> x, h_prev, c_prev;
    std::vector<Eigen::MatrixXd> input, forget, output, cell, tanh_c;
    Eigen::MatrixXd h_final;
    int steps() const { return static_cast<int>(x.size()); }
};

LstmCache lstm_forward_batch(const LstmParams &p,
                             std::span<const Eigen::MatrixXd> windows);
std::pair<Eigen::VectorXd, LstmCache> lstm_forward(const LstmParams &p,
                                                   const Eigen::MatrixXd &window);
std::vector<Eigen::MatrixXd> lstm_backward(const LstmParams &p, const LstmCache &cache,
                                           const Eigen::MatrixXd &dh_final,
                                           LstmGrad &grad);

// ---------------------------------------------------------------------------
// Loss and optimizer
// ---------------------------------------------------------------------------

struct MseResult {
    double loss;
    Eigen::MatrixXd grad;  // 2 (pred - target) / count
};
/// Mean squared error over all elements.
MseResult mse_loss(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &target);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. The parameter list must be identical (same
/// tensors, same order) on every call; moments are allocated on first use.
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {});

    /// Throws TrainError on non-finite gradients, leaving parameters and
    /// moments untouched.
    void step(std::span<const ParamRef> params);

    long step_count() const { return t_; }

  private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<Eigen::ArrayXd> m_, v_;
};

// ---------------------------------------------------------------------------
// Initialization: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases.
// ---------------------------------------------------------------------------

Eigen::MatrixXd uniform_init(int rows, int cols, int fan_in, std::mt19937_64 &rng);
LinearParams make_linear(int out, int in, std::mt19937_64 &rng);
GruParams make_gru(int input, int hidden, std::mt19937_64 &rng);
LstmParams make_lstm(int input, int hidden, std::mt19937_64 &rng);

} // namespace vqcast::nn
