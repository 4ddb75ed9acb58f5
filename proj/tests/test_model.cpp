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

#include <cmath>
#include <random>

#include <doctest.h>

#include "vqcast/common.hpp"
#include "vqcast/model.hpp"

using namespace vqcast;
using model::HybridModelGrad;
using model::HybridModelParams;
using model::ModelConfig;
using model::Variant;

namespace {

ModelConfig tiny_config(Variant v) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.input_size = 4;
    cfg.hidden_size = 3;
    cfg.n_qubits = 2;
    cfg.depth = 1;
    cfg.window_len = 5;
    cfg.horizons = {1, 2, 3};
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 77;
    return cfg;
}

// Finite difference of a scalar loss with respect to one tensor.
template <typename Loss>
Eigen::MatrixXd fd_tensor(Eigen::MatrixXd &m, Loss loss, double step = 1e-5) {
    Eigen::MatrixXd g(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double save = m(r, c);
            m(r, c) = save + step;
            const double up = loss();
            m(r, c) = save - step;
            const double dn = loss();
            m(r, c) = save;
            g(r, c) = (up - dn) / (2.0 * step);
        }
    }
    return g;
}

void check_close_rel(const Eigen::MatrixXd &got, const Eigen::MatrixXd &want,
                     double tol) {
    REQUIRE(got.rows() == want.rows());
    REQUIRE(got.cols() == want.cols());
    for (Eigen::Index r = 0; r < got.rows(); ++r) {
        for (Eigen::Index c = 0; c < got.cols(); ++c) {
            const double denom = 1.0 + std::abs(want(r, c));
            CHECK(std::abs(got(r, c) - want(r, c)) / denom < tol);
        }
    }
}

model::TrainSet random_set(int count, const ModelConfig &cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    model::TrainSet set;
    for (int i = 0; i < count; ++i) {
        Eigen::MatrixXd x(cfg.window_len, cfg.input_size);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = dist(rng);
        }
        Eigen::MatrixXd y(cfg.num_horizons(), model::kNumTasks);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) = dist(rng);
        }
        set.x.push_back(std::move(x));
        set.y.push_back(std::move(y));
    }
    return set;
}

} // namespace

TEST_CASE("config validation") {
    ModelConfig cfg = tiny_config(Variant::hybrid);
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("hybrid without qubits is rejected") {
        cfg.n_qubits = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("horizons must strictly increase") {
        cfg.horizons = {15, 15, 60};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("gru_only ignores qubit settings") {
        ModelConfig g = tiny_config(Variant::gru_only);
        g.n_qubits = 0;
        CHECK_NOTHROW(g.validate());
        CHECK(g.feature_size() == g.hidden_size);
    }
    SUBCASE("variant names round-trip") {
        for (Variant v :
             {Variant::hybrid, Variant::gru_only, Variant::lstm_baseline}) {
            CHECK(model::variant_from_string(model::to_string(v)) == v);
        }
        CHECK_THROWS_AS(model::variant_from_string("cnn"), ConfigError);
    }
}

TEST_CASE("forward composition") {
    SUBCASE("zero encoder and projection give an all-ones quantum vector") {
        ModelConfig cfg = tiny_config(Variant::hybrid);
        HybridModelParams p = model::init_params(cfg);
        p.gru.w_update.setZero();
        p.gru.u_update.setZero();
        p.gru.b_update.setZero();
        p.gru.w_reset.setZero();
        p.gru.u_reset.setZero();
        p.gru.b_reset.setZero();
        p.gru.w_cand.setZero();
        p.gru.u_cand.setZero();
        p.gru.b_cand.setZero();
        p.projection.weight.setZero();
        p.projection.bias.setZero();
        for (Eigen::MatrixXd &w : p.omega) w.setZero();

        const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 4);
        const Eigen::MatrixXd pred = model::forward(p, window);
        // Features are [0, 0, 0, 1, 1]: each head sees a constant vector.
        Eigen::VectorXd feat = Eigen::VectorXd::Zero(cfg.feature_size());
        feat.tail(cfg.n_qubits).setOnes();
        for (int h = 0; h < cfg.num_horizons(); ++h) {
            const Eigen::VectorXd want =
                p.heads[static_cast<std::size_t>(h)].weight * feat +
                p.heads[static_cast<std::size_t>(h)].bias;
            CHECK((pred.row(h).transpose() - want).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SUBCASE("gru_only heads consume the hidden state directly") {
        ModelConfig cfg = tiny_config(Variant::gru_only);
        HybridModelParams p = model::init_params(cfg);
        CHECK(p.heads[0].in_features() == cfg.hidden_size);
        CHECK(p.omega.empty());

        const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 4);
        const auto [h, cache] = nn::gru_forward(p.gru, window);
        const Eigen::MatrixXd pred = model::forward(p, window);
        for (int k = 0; k < cfg.num_horizons(); ++k) {
            const Eigen::VectorXd want =
                nn::linear_forward(p.heads[static_cast<std::size_t>(k)], h);
            CHECK((pred.row(k).transpose() - want).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SUBCASE("hybrid forward equals the scripted composition") {
        ModelConfig cfg = tiny_config(Variant::hybrid);
        HybridModelParams p = model::init_params(cfg);
        const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 4);

        const auto [z, cache] = nn::gru_forward(p.gru, window);
        const Eigen::VectorXd theta = nn::linear_forward(p.projection, z);
        const Eigen::VectorXd q = quantum::circuit_readout(p.circuit_for(theta));
        Eigen::VectorXd feat(cfg.feature_size());
        feat << z, q;

        const Eigen::MatrixXd pred = model::forward(p, window);
        for (int h = 0; h < cfg.num_horizons(); ++h) {
            const Eigen::VectorXd want =
                nn::linear_forward(p.heads[static_cast<std::size_t>(h)], feat);
            CHECK((pred.row(h).transpose() - want).cwiseAbs().maxCoeff() < 1e-12);
        }
        CHECK(q.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    }
    SUBCASE("without entanglement each readout sees only its own qubit") {
        ModelConfig cfg = tiny_config(Variant::hybrid);
        cfg.entanglement = false;
        HybridModelParams p = model::init_params(cfg);
        const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 4);

        const auto base = model::forward_batch(
            p, std::span<const Eigen::MatrixXd>(&window, 1));
        // Moving the projection row of qubit 1 changes theta_1 only; the
        // readout of qubit 0 must not move.
        p.projection.weight.row(1).array() += 0.8;
        p.projection.bias(1) -= 0.4;
        const auto moved = model::forward_batch(
            p, std::span<const Eigen::MatrixXd>(&window, 1));
        CHECK(std::abs(moved.readout(0, 0) - base.readout(0, 0)) < 1e-12);
        CHECK(std::abs(moved.readout(0, 1) - base.readout(0, 1)) > 1e-4);
    }
    SUBCASE("lstm baseline runs through its own encoder") {
        ModelConfig cfg = tiny_config(Variant::lstm_baseline);
        HybridModelParams p = model::init_params(cfg);
        const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 4);
        const auto [h, cache] = nn::lstm_forward(p.lstm, window);
        const Eigen::MatrixXd pred = model::forward(p, window);
        const Eigen::VectorXd want = nn::linear_forward(p.heads[0], h);
        CHECK((pred.row(0).transpose() - want).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("end-to-end gradients") {
    ModelConfig cfg = tiny_config(Variant::hybrid);
    HybridModelParams p = model::init_params(cfg);
    const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 4);
    const Eigen::MatrixXd target = Eigen::MatrixXd::Random(3, 4);

    HybridModelGrad grad = HybridModelGrad::zeros_like(p);
    model::backward(p, window, target, grad);

    auto loss = [&]() {
        return nn::mse_loss(model::forward(p, window), target).loss;
    };

    SUBCASE("matches finite differences to 1e-4 relative") {
        check_close_rel(grad.gru.w_cand, fd_tensor(p.gru.w_cand, loss), 1e-4);
        check_close_rel(grad.gru.u_update, fd_tensor(p.gru.u_update, loss), 1e-4);
        check_close_rel(grad.projection.weight,
                        fd_tensor(p.projection.weight, loss), 1e-4);
        check_close_rel(grad.omega[0], fd_tensor(p.omega[0], loss), 1e-4);
        check_close_rel(grad.heads[0].weight, fd_tensor(p.heads[0].weight, loss),
                        1e-4);
        check_close_rel(grad.heads[2].weight, fd_tensor(p.heads[2].weight, loss),
                        1e-4);
        Eigen::MatrixXd bias = p.projection.bias;
        const Eigen::MatrixXd fd_bias = fd_tensor(bias, [&]() {
            HybridModelParams q = p;
            q.projection.bias = bias;
            return nn::mse_loss(model::forward(q, window), target).loss;
        });
        check_close_rel(grad.projection.bias, fd_bias, 1e-4);
    }
    SUBCASE("zero loss gradient gives all-zero parameter gradients") {
        const Eigen::MatrixXd pred = model::forward(p, window);
        HybridModelGrad g0 = HybridModelGrad::zeros_like(p);
        const double loss0 = model::backward(p, window, pred, g0);
        CHECK(loss0 == 0.0);
        CHECK(g0.gru.w_update.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g0.projection.weight.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g0.omega[0].cwiseAbs().maxCoeff() == 0.0);
        CHECK(g0.heads[1].weight.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("gru_only gradients carry no circuit terms") {
        ModelConfig gcfg = tiny_config(Variant::gru_only);
        HybridModelParams gp = model::init_params(gcfg);
        HybridModelGrad gg = HybridModelGrad::zeros_like(gp);
        model::backward(gp, window, target, gg);
        CHECK(gg.omega.empty());
        CHECK(gg.projection.weight.size() == 0);
        CHECK(gg.gru.w_cand.cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("predict_batch") {
    ModelConfig cfg = tiny_config(Variant::hybrid);
    HybridModelParams p = model::init_params(cfg);
    std::vector<Eigen::MatrixXd> windows;
    for (int i = 0; i < 7; ++i) windows.push_back(Eigen::MatrixXd::Random(5, 4));

    const std::vector<Eigen::MatrixXd> batch = model::predict_batch(p, windows);

    SUBCASE("equals a loop of single forwards") {
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const Eigen::MatrixXd single = model::forward(p, windows[i]);
            CHECK((batch[i] - single).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("batch of one equals single forward") {
        const auto one = model::predict_batch(
            p, std::span<const Eigen::MatrixXd>(&windows[3], 1));
        CHECK((one[0] - model::forward(p, windows[3])).cwiseAbs().maxCoeff() <
              1e-12);
    }
    SUBCASE("permuting the batch permutes the outputs") {
        std::vector<Eigen::MatrixXd> reversed(windows.rbegin(), windows.rend());
        const auto back = model::predict_batch(p, reversed);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            CHECK((back[windows.size() - 1 - i] - batch[i]).cwiseAbs().maxCoeff() <
                  1e-12);
        }
    }
}

TEST_CASE("train_fold") {
    ModelConfig cfg = tiny_config(Variant::hybrid);
    const model::TrainSet train = random_set(24, cfg, 501);
    const model::TrainSet val = random_set(6, cfg, 502);

    SUBCASE("identical seeds give bitwise-identical traces") {
        const model::TrainResult a = model::train_fold(cfg, train, val);
        const model::TrainResult b = model::train_fold(cfg, train, val);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t e = 0; e < a.trace.size(); ++e) {
            CHECK(a.trace[e].train_mse == b.trace[e].train_mse);
            CHECK(a.trace[e].val_mse == b.trace[e].val_mse);
        }
        CHECK((a.params.gru.w_cand - b.params.gru.w_cand).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((a.params.omega[0] - b.params.omega[0]).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("different seeds move the parameters differently") {
        ModelConfig other = cfg;
        other.seed = cfg.seed + 1;
        const model::TrainResult a = model::train_fold(cfg, train, val);
        const model::TrainResult b = model::train_fold(other, train, val);
        CHECK((a.params.gru.w_cand - b.params.gru.w_cand).cwiseAbs().maxCoeff() >
              0.0);
    }
    SUBCASE("loss decreases on a learnable problem") {
        // Predictable targets: the future equals the recent mean, so a few
        // epochs must reduce the loss.
        model::TrainSet set = random_set(32, cfg, 503);
        for (std::size_t i = 0; i < set.x.size(); ++i) {
            const Eigen::RowVectorXd mean = set.x[i].colwise().mean();
            for (Eigen::Index h = 0; h < set.y[i].rows(); ++h) {
                set.y[i].row(h) = mean;
            }
        }
        ModelConfig c2 = cfg;
        c2.epochs = 10;
        const model::TrainResult r = model::train_fold(c2, set, {});
        CHECK(r.trace.back().train_mse < r.trace.front().train_mse);
        CHECK(std::isnan(r.trace.back().val_mse));
    }
    SUBCASE("a single repeated window is memorized") {
        model::TrainSet one = random_set(1, cfg, 504);
        model::TrainSet repeated;
        for (int i = 0; i < 64; ++i) {
            repeated.x.push_back(one.x[0]);
            repeated.y.push_back(one.y[0]);
        }
        ModelConfig c2 = cfg;
        c2.epochs = 30;
        c2.batch_size = 16;
        c2.learning_rate = 1e-2;
        const model::TrainResult r = model::train_fold(c2, repeated, {});
        double best = r.trace.front().train_mse;
        for (const model::EpochStats &s : r.trace) {
            best = std::min(best, s.train_mse);
        }
        CHECK(best < 1e-3);
    }
    SUBCASE("empty training set is a configuration error") {
        CHECK_THROWS_AS(model::train_fold(cfg, {}, {}), ConfigError);
    }
}
