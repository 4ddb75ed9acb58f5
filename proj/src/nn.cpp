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

#include "vqcast/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "vqcast/common.hpp"

namespace vqcast::nn {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd &x) {
    return ((-x.array()).exp() + 1.0).inverse().matrix();
}

// Stacks windows timestep-wise: result[t] is B x d_x.
std::vector<Eigen::MatrixXd> to_steps(std::span<const Eigen::MatrixXd> windows) {
    if (windows.empty()) throw std::invalid_argument("empty window batch");
    const Eigen::Index steps = windows[0].rows();
    const Eigen::Index d = windows[0].cols();
    for (const Eigen::MatrixXd &w : windows) {
        if (w.rows() != steps || w.cols() != d) {
            throw std::invalid_argument("windows in a batch must share one shape");
        }
    }
    std::vector<Eigen::MatrixXd> xts(static_cast<std::size_t>(steps));
    const Eigen::Index batch = static_cast<Eigen::Index>(windows.size());
    for (Eigen::Index t = 0; t < steps; ++t) {
        Eigen::MatrixXd xt(batch, d);
        for (Eigen::Index b = 0; b < batch; ++b) xt.row(b) = windows[b].row(t);
        xts[static_cast<std::size_t>(t)] = std::move(xt);
    }
    return xts;
}

void check_shape(bool ok, const char *what) {
    if (!ok) throw std::invalid_argument(what);
}

} // namespace

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

LinearGrad LinearGrad::zeros_like(const LinearParams &p) {
    return {Eigen::MatrixXd::Zero(p.weight.rows(), p.weight.cols()),
            Eigen::VectorXd::Zero(p.bias.size())};
}

void LinearGrad::add_refs(std::vector<ParamRef> &out, LinearParams &p) const {
    out.push_back({p.weight.data(), weight.data(), p.weight.size()});
    out.push_back({p.bias.data(), bias.data(), p.bias.size()});
}

Eigen::VectorXd linear_forward(const LinearParams &p, const Eigen::VectorXd &x) {
    check_shape(x.size() == p.weight.cols(), "linear input size mismatch");
    return p.weight * x + p.bias;
}

Eigen::MatrixXd linear_forward_batch(const LinearParams &p, const Eigen::MatrixXd &x) {
    check_shape(x.cols() == p.weight.cols(), "linear input size mismatch");
    return (x * p.weight.transpose()).rowwise() + p.bias.transpose();
}

Eigen::VectorXd linear_backward(const LinearParams &p, const Eigen::VectorXd &x,
                                const Eigen::VectorXd &dy, LinearGrad &grad) {
    check_shape(x.size() == p.weight.cols() && dy.size() == p.weight.rows(),
                "linear backward shape mismatch");
    grad.weight.noalias() += dy * x.transpose();
    grad.bias += dy;
    return p.weight.transpose() * dy;
}

Eigen::MatrixXd linear_backward_batch(const LinearParams &p, const Eigen::MatrixXd &x,
                                      const Eigen::MatrixXd &dy, LinearGrad &grad) {
    check_shape(x.cols() == p.weight.cols() && dy.cols() == p.weight.rows() &&
                    x.rows() == dy.rows(),
                "linear backward shape mismatch");
    grad.weight.noalias() += dy.transpose() * x;
    grad.bias += dy.colwise().sum().transpose();
    return dy * p.weight;
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

GruGrad GruGrad::zeros_like(const GruParams &p) {
    GruGrad g;
    auto zs = [](const Eigen::MatrixXd &m) {
        return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    };
    g.w_update = zs(p.w_update);
    g.u_update = zs(p.u_update);
    g.b_update = Eigen::VectorXd::Zero(p.b_update.size());
    g.w_reset = zs(p.w_reset);
    g.u_reset = zs(p.u_reset);
    g.b_reset = Eigen::VectorXd::Zero(p.b_reset.size());
    g.w_cand = zs(p.w_cand);
    g.u_cand = zs(p.u_cand);
    g.b_cand = Eigen::VectorXd::Zero(p.b_cand.size());
    return g;
}

void GruGrad::add_refs(std::vector<ParamRef> &out, GruParams &p) const {
    out.push_back({p.w_update.data(), w_update.data(), p.w_update.size()});
    out.push_back({p.u_update.data(), u_update.data(), p.u_update.size()});
    out.push_back({p.b_update.data(), b_update.data(), p.b_update.size()});
    out.push_back({p.w_reset.data(), w_reset.data(), p.w_reset.size()});
    out.push_back({p.u_reset.data(), u_reset.data(), p.u_reset.size()});
    out.push_back({p.b_reset.data(), b_reset.data(), p.b_reset.size()});
    out.push_back({p.w_cand.data(), w_cand.data(), p.w_cand.size()});
    out.push_back({p.u_cand.data(), u_cand.data(), p.u_cand.size()});
    out.push_back({p.b_cand.data(), b_cand.data(), p.b_cand.size()});
}

GruCache gru_forward_batch(const GruParams &p,
                           std::span<const Eigen::MatrixXd> windows) {
    std::vector<Eigen::MatrixXd> xts = to_steps(windows);
    check_shape(xts[0].cols() == p.input_size(), "window width != gru input size");

    const Eigen::Index batch = xts[0].rows();
    const int dz = p.hidden_size();
    const int steps = static_cast<int>(xts.size());

    GruCache cache;
    cache.x = std::move(xts);
    cache.h_prev.reserve(static_cast<std::size_t>(steps));
    cache.update.reserve(static_cast<std::size_t>(steps));
    cache.reset.reserve(static_cast<std::size_t>(steps));
    cache.cand.reserve(static_cast<std::size_t>(steps));

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, dz);
    for (int t = 0; t < steps; ++t) {
        const Eigen::MatrixXd &xt = cache.x[static_cast<std::size_t>(t)];
        Eigen::MatrixXd z = sigmoid(((xt * p.w_update.transpose() +
                                      h * p.u_update.transpose()).rowwise() +
                                     p.b_update.transpose()));
        Eigen::MatrixXd r = sigmoid(((xt * p.w_reset.transpose() +
                                      h * p.u_reset.transpose()).rowwise() +
                                     p.b_reset.transpose()));
        Eigen::MatrixXd c = ((xt * p.w_cand.transpose() +
                              (r.array() * h.array()).matrix() * p.u_cand.transpose())
                                 .rowwise() +
                             p.b_cand.transpose())
                                .array()
                                .tanh()
                                .matrix();
        cache.h_prev.push_back(h);
        Eigen::MatrixXd h_new =
            ((1.0 - z.array()) * h.array() + z.array() * c.array()).matrix();
        cache.update.push_back(std::move(z));
        cache.reset.push_back(std::move(r));
        cache.cand.push_back(std::move(c));
        h = std::move(h_new);
    }
    cache.h_final = std::move(h);
    return cache;
}

std::pair<Eigen::VectorXd, GruCache> gru_forward(const GruParams &p,
                                                 const Eigen::MatrixXd &window) {
    GruCache cache = gru_forward_batch(p, std::span<const Eigen::MatrixXd>(&window, 1));
    return {cache.h_final.row(0).transpose(), std::move(cache)};
}

std::vector<Eigen::MatrixXd> gru_backward(const GruParams &p, const GruCache &cache,
                                          const Eigen::MatrixXd &dh_final,
                                          GruGrad &grad) {
    const int steps = cache.steps();
    if (steps == 0 || cache.h_prev.size() != cache.x.size() ||
        cache.h_final.cols() != p.hidden_size() ||
        cache.x[0].cols() != p.input_size()) {
        throw std::logic_error("gru cache does not match these parameters");
    }
    check_shape(dh_final.rows() == cache.h_final.rows() &&
                    dh_final.cols() == cache.h_final.cols(),
                "upstream hidden gradient shape mismatch");

    std::vector<Eigen::MatrixXd> dx(static_cast<std::size_t>(steps));
    Eigen::MatrixXd dh = dh_final;
    for (int t = steps - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        const Eigen::MatrixXd &xt = cache.x[ti];
        const Eigen::MatrixXd &hp = cache.h_prev[ti];
        const Eigen::MatrixXd &z = cache.update[ti];
        const Eigen::MatrixXd &r = cache.reset[ti];
        const Eigen::MatrixXd &c = cache.cand[ti];

        const Eigen::MatrixXd dz = (dh.array() * (c.array() - hp.array())).matrix();
        const Eigen::MatrixXd dc = (dh.array() * z.array()).matrix();
        Eigen::MatrixXd dhp = (dh.array() * (1.0 - z.array())).matrix();

        const Eigen::MatrixXd dc_pre =
            (dc.array() * (1.0 - c.array().square())).matrix();
        grad.w_cand.noalias() += dc_pre.transpose() * xt;
        grad.u_cand.noalias() +=
            dc_pre.transpose() * (r.array() * hp.array()).matrix();
        grad.b_cand += dc_pre.colwise().sum().transpose();

        const Eigen::MatrixXd drh = dc_pre * p.u_cand;
        const Eigen::MatrixXd dr = (drh.array() * hp.array()).matrix();
        dhp += (drh.array() * r.array()).matrix();

        const Eigen::MatrixXd dr_pre =
            (dr.array() * r.array() * (1.0 - r.array())).matrix();
        grad.w_reset.noalias() += dr_pre.transpose() * xt;
        grad.u_reset.noalias() += dr_pre.transpose() * hp;
        grad.b_reset += dr_pre.colwise().sum().transpose();
        dhp.noalias() += dr_pre * p.u_reset;

        const Eigen::MatrixXd dz_pre =
            (dz.array() * z.array() * (1.0 - z.array())).matrix();
        grad.w_update.noalias() += dz_pre.transpose() * xt;
        grad.u_update.noalias() += dz_pre.transpose() * hp;
        grad.b_update += dz_pre.colwise().sum().transpose();
        dhp.noalias() += dz_pre * p.u_update;

        dx[ti] = dc_pre * p.w_cand + dr_pre * p.w_reset + dz_pre * p.w_update;
        dh = std::move(dhp);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LstmGrad LstmGrad::zeros_like(const LstmParams &p) {
    LstmGrad g;
    auto zs = [](const Eigen::MatrixXd &m) {
        return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    };
    g.w_input = zs(p.w_input);
    g.u_input = zs(p.u_input);
    g.b_input = Eigen::VectorXd::Zero(p.b_input.size());
    g.w_forget = zs(p.w_forget);
    g.u_forget = zs(p.u_forget);
    g.b_forget = Eigen::VectorXd::Zero(p.b_forget.size());
    g.w_output = zs(p.w_output);
    g.u_output = zs(p.u_output);
    g.b_output = Eigen::VectorXd::Zero(p.b_output.size());
    g.w_cell = zs(p.w_cell);
    g.u_cell = zs(p.u_cell);
    g.b_cell = Eigen::VectorXd::Zero(p.b_cell.size());
    return g;
}

void LstmGrad::add_refs(std::vector<ParamRef> &out, LstmParams &p) const {
    out.push_back({p.w_input.data(), w_input.data(), p.w_input.size()});
    out.push_back({p.u_input.data(), u_input.data(), p.u_input.size()});
    out.push_back({p.b_input.data(), b_input.data(), p.b_input.size()});
    out.push_back({p.w_forget.data(), w_forget.data(), p.w_forget.size()});
    out.push_back({p.u_forget.data(), u_forget.data(), p.u_forget.size()});
    out.push_back({p.b_forget.data(), b_forget.data(), p.b_forget.size()});
    out.push_back({p.w_output.data(), w_output.data(), p.w_output.size()});
    out.push_back({p.u_output.data(), u_output.data(), p.u_output.size()});
    out.push_back({p.b_output.data(), b_output.data(), p.b_output.size()});
    out.push_back({p.w_cell.data(), w_cell.data(), p.w_cell.size()});
    out.push_back({p.u_cell.data(), u_cell.data(), p.u_cell.size()});
    out.push_back({p.b_cell.data(), b_cell.data(), p.b_cell.size()});
}

LstmCache lstm_forward_batch(const LstmParams &p,
                             std::span<const Eigen::MatrixXd> windows) {
    std::vector<Eigen::MatrixXd> xts = to_steps(windows);
    check_shape(xts[0].cols() == p.input_size(), "window width != lstm input size");

    const Eigen::Index batch = xts[0].rows();
    const int dz = p.hidden_size();
    const int steps = static_cast<int>(xts.size());

    LstmCache cache;
    cache.x = std::move(xts);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, dz);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(batch, dz);
    for (int t = 0; t < steps; ++t) {
        const Eigen::MatrixXd &xt = cache.x[static_cast<std::size_t>(t)];
        auto gate_pre = [&](const Eigen::MatrixXd &w, const Eigen::MatrixXd &u,
                            const Eigen::VectorXd &b) -> Eigen::MatrixXd {
            return (xt * w.transpose() + h * u.transpose()).rowwise() + b.transpose();
        };
        Eigen::MatrixXd i = sigmoid(gate_pre(p.w_input, p.u_input, p.b_input));
        Eigen::MatrixXd f = sigmoid(gate_pre(p.w_forget, p.u_forget, p.b_forget));
        Eigen::MatrixXd o = sigmoid(gate_pre(p.w_output, p.u_output, p.b_output));
        Eigen::MatrixXd g =
            gate_pre(p.w_cell, p.u_cell, p.b_cell).array().tanh().matrix();

        cache.h_prev.push_back(h);
        cache.c_prev.push_back(c);
        c = (f.array() * c.array() + i.array() * g.array()).matrix();
        Eigen::MatrixXd tc = c.array().tanh().matrix();
        h = (o.array() * tc.array()).matrix();

        cache.input.push_back(std::move(i));
        cache.forget.push_back(std::move(f));
        cache.output.push_back(std::move(o));
        cache.cell.push_back(std::move(g));
        cache.tanh_c.push_back(std::move(tc));
    }
    cache.h_final = h;
    return cache;
}

std::pair<Eigen::VectorXd, LstmCache> lstm_forward(const LstmParams &p,
                                                   const Eigen::MatrixXd &window) {
    LstmCache cache =
        lstm_forward_batch(p, std::span<const Eigen::MatrixXd>(&window, 1));
    return {cache.h_final.row(0).transpose(), std::move(cache)};
}

std::vector<Eigen::MatrixXd> lstm_backward(const LstmParams &p, const LstmCache &cache,
                                           const Eigen::MatrixXd &dh_final,
                                           LstmGrad &grad) {
    const int steps = cache.steps();
    if (steps == 0 || cache.h_prev.size() != cache.x.size() ||
        cache.h_final.cols() != p.hidden_size() ||
        cache.x[0].cols() != p.input_size()) {
        throw std::logic_error("lstm cache does not match these parameters");
    }
    check_shape(dh_final.rows() == cache.h_final.rows() &&
                    dh_final.cols() == cache.h_final.cols(),
                "upstream hidden gradient shape mismatch");

    std::vector<Eigen::MatrixXd> dx(static_cast<std::size_t>(steps));
    Eigen::MatrixXd dh = dh_final;
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(dh.rows(), dh.cols());
    for (int t = steps - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        const Eigen::MatrixXd &xt = cache.x[ti];
        const Eigen::MatrixXd &hp = cache.h_prev[ti];
        const Eigen::MatrixXd &cp = cache.c_prev[ti];
        const Eigen::MatrixXd &i = cache.input[ti];
        const Eigen::MatrixXd &f = cache.forget[ti];
        const Eigen::MatrixXd &o = cache.output[ti];
        const Eigen::MatrixXd &g = cache.cell[ti];
        const Eigen::MatrixXd &tc = cache.tanh_c[ti];

        const Eigen::MatrixXd do_ = (dh.array() * tc.array()).matrix();
        dc += (dh.array() * o.array() * (1.0 - tc.array().square())).matrix();

        const Eigen::MatrixXd di = (dc.array() * g.array()).matrix();
        const Eigen::MatrixXd df = (dc.array() * cp.array()).matrix();
        const Eigen::MatrixXd dg = (dc.array() * i.array()).matrix();
        const Eigen::MatrixXd dc_prev = (dc.array() * f.array()).matrix();

        const Eigen::MatrixXd di_pre =
            (di.array() * i.array() * (1.0 - i.array())).matrix();
        const Eigen::MatrixXd df_pre =
            (df.array() * f.array() * (1.0 - f.array())).matrix();
        const Eigen::MatrixXd do_pre =
            (do_.array() * o.array() * (1.0 - o.array())).matrix();
        const Eigen::MatrixXd dg_pre =
            (dg.array() * (1.0 - g.array().square())).matrix();

        grad.w_input.noalias() += di_pre.transpose() * xt;
        grad.u_input.noalias() += di_pre.transpose() * hp;
        grad.b_input += di_pre.colwise().sum().transpose();
        grad.w_forget.noalias() += df_pre.transpose() * xt;
        grad.u_forget.noalias() += df_pre.transpose() * hp;
        grad.b_forget += df_pre.colwise().sum().transpose();
        grad.w_output.noalias() += do_pre.transpose() * xt;
        grad.u_output.noalias() += do_pre.transpose() * hp;
        grad.b_output += do_pre.colwise().sum().transpose();
        grad.w_cell.noalias() += dg_pre.transpose() * xt;
        grad.u_cell.noalias() += dg_pre.transpose() * hp;
        grad.b_cell += dg_pre.colwise().sum().transpose();

        dx[ti] = di_pre * p.w_input + df_pre * p.w_forget + do_pre * p.w_output +
                 dg_pre * p.w_cell;
        dh = di_pre * p.u_input + df_pre * p.u_forget + do_pre * p.u_output +
             dg_pre * p.u_cell;
        dc = dc_prev;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Loss and optimizer
// ---------------------------------------------------------------------------

MseResult mse_loss(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &target) {
    check_shape(pred.rows() == target.rows() && pred.cols() == target.cols(),
                "mse shape mismatch");
    const double count = static_cast<double>(pred.size());
    const Eigen::MatrixXd diff = pred - target;
    return {diff.squaredNorm() / count, (2.0 / count) * diff};
}

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
    if (cfg_.learning_rate <= 0.0) {
        throw ConfigError("adam learning rate must be positive");
    }
}

void Adam::step(std::span<const ParamRef> params) {
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const ParamRef &p : params) {
            m_.push_back(Eigen::ArrayXd::Zero(p.size));
            v_.push_back(Eigen::ArrayXd::Zero(p.size));
        }
    } else if (m_.size() != params.size()) {
        throw std::logic_error("adam called with a different parameter list");
    }

    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size != m_[k].size()) {
            throw std::logic_error("adam parameter shape changed between steps");
        }
        const Eigen::Map<const Eigen::ArrayXd> g(params[k].grad, params[k].size);
        if (!g.isFinite().all()) {
            throw TrainError("non-finite gradient in optimizer step");
        }
    }

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Eigen::Map<const Eigen::ArrayXd> g(params[k].grad, params[k].size);
        Eigen::Map<Eigen::ArrayXd> value(params[k].value, params[k].size);
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.square();
        value -= cfg_.learning_rate * (m_[k] / bc1) / ((v_[k] / bc2).sqrt() + cfg_.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

Eigen::MatrixXd uniform_init(int rows, int cols, int fan_in, std::mt19937_64 &rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
    }
    return m;
}

LinearParams make_linear(int out, int in, std::mt19937_64 &rng) {
    return {uniform_init(out, in, in, rng), Eigen::VectorXd::Zero(out)};
}

GruParams make_gru(int input, int hidden, std::mt19937_64 &rng) {
    GruParams p;
    p.w_update = uniform_init(hidden, input, input, rng);
    p.u_update = uniform_init(hidden, hidden, hidden, rng);
    p.b_update = Eigen::VectorXd::Zero(hidden);
    p.w_reset = uniform_init(hidden, input, input, rng);
    p.u_reset = uniform_init(hidden, hidden, hidden, rng);
    p.b_reset = Eigen::VectorXd::Zero(hidden);
    p.w_cand = uniform_init(hidden, input, input, rng);
    p.u_cand = uniform_init(hidden, hidden, hidden, rng);
    p.b_cand = Eigen::VectorXd::Zero(hidden);
    return p;
}

LstmParams make_lstm(int input, int hidden, std::mt19937_64 &rng) {
    LstmParams p;
    p.w_input = uniform_init(hidden, input, input, rng);
    p.u_input = uniform_init(hidden, hidden, hidden, rng);
    p.b_input = Eigen::VectorXd::Zero(hidden);
    p.w_forget = uniform_init(hidden, input, input, rng);
    p.u_forget = uniform_init(hidden, hidden, hidden, rng);
    p.b_forget = Eigen::VectorXd::Zero(hidden);
    p.w_output = uniform_init(hidden, input, input, rng);
    p.u_output = uniform_init(hidden, hidden, hidden, rng);
    p.b_output = Eigen::VectorXd::Zero(hidden);
    p.w_cell = uniform_init(hidden, input, input, rng);
    p.u_cell = uniform_init(hidden, hidden, hidden, rng);
    p.b_cell = Eigen::VectorXd::Zero(hidden);
    return p;
}

} // namespace vqcast::nn
