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

#include "vqcast/quantum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vqcast::quantum {

namespace {

constexpr Complex kI{0.0, 1.0};

// Gate sequence of one circuit instance, flattened so that forward and
// reverse sweeps share the same walk.
struct GateOp {
    enum Kind { Ry, Rz, Cnot } kind;
    int qubit;       // target for Cnot
    int control;     // Cnot only
    double angle;    // rotations only
    int slot;        // flat angle index, -1 for Cnot
};

// Flat angle order: theta_0..theta_{n-1}, then per repetition l and qubit j
// the (alpha, beta, gamma) triplet.
int flat_slot_theta(int qubit) { return qubit; }
int flat_slot_omega(int n, int layer, int qubit, int comp) {
    return n + (layer * n + qubit) * 3 + comp;
}

std::vector<GateOp> build_gate_list(const CircuitParams &p) {
    const int n = p.n_qubits();
    std::vector<GateOp> gates;
    gates.reserve(static_cast<std::size_t>(n) * (1 + 4 * p.depth()));
    for (int j = 0; j < n; ++j) {
        gates.push_back({GateOp::Ry, j, -1, p.theta(j), flat_slot_theta(j)});
    }
    for (int l = 0; l < p.depth(); ++l) {
        const Eigen::MatrixXd &w = p.omega[static_cast<std::size_t>(l)];
        for (int j = 0; j < n; ++j) {
            // Rz(alpha) Ry(beta) Rz(gamma) acts with the gamma factor first.
            gates.push_back({GateOp::Rz, j, -1, w(j, 2), flat_slot_omega(n, l, j, 2)});
            gates.push_back({GateOp::Ry, j, -1, w(j, 1), flat_slot_omega(n, l, j, 1)});
            gates.push_back({GateOp::Rz, j, -1, w(j, 0), flat_slot_omega(n, l, j, 0)});
        }
        if (p.entanglement) {
            for (int j = 0; j + 1 < n; ++j) {
                gates.push_back({GateOp::Cnot, j + 1, j, 0.0, -1});
            }
            gates.push_back({GateOp::Cnot, 0, n - 1, 0.0, -1});
        }
    }
    return gates;
}

void apply_gate(Statevector &st, const GateOp &g) {
    switch (g.kind) {
    case GateOp::Ry: st.apply_ry(g.qubit, g.angle); break;
    case GateOp::Rz: st.apply_rz(g.qubit, g.angle); break;
    case GateOp::Cnot: st.apply_cnot(g.control, g.qubit); break;
    }
}

void apply_gate_inverse(Statevector &st, const GateOp &g) {
    switch (g.kind) {
    case GateOp::Ry: st.apply_ry(g.qubit, -g.angle); break;
    case GateOp::Rz: st.apply_rz(g.qubit, -g.angle); break;
    case GateOp::Cnot: st.apply_cnot(g.control, g.qubit); break;
    }
}

// dG/da as a dense 2x2 operator, row-major.
std::array<Complex, 4> gate_derivative(const GateOp &g) {
    const double h = 0.5 * g.angle;
    if (g.kind == GateOp::Ry) {
        return {Complex{-0.5 * std::sin(h), 0.0}, Complex{-0.5 * std::cos(h), 0.0},
                Complex{0.5 * std::cos(h), 0.0}, Complex{-0.5 * std::sin(h), 0.0}};
    }
    // Rz
    return {-0.5 * kI * std::exp(-kI * h), Complex{0.0, 0.0},
            Complex{0.0, 0.0}, 0.5 * kI * std::exp(kI * h)};
}

} // namespace

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 20) {
        throw std::invalid_argument("statevector qubit count must be in [1, 20], got " +
                                    std::to_string(n_qubits));
    }
    amp_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amp_[0] = Complex{1.0, 0.0};
}

void Statevector::check_qubit(int qubit) const {
    if (qubit < 0 || qubit >= n_qubits_) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) +
                                " out of range for " + std::to_string(n_qubits_) +
                                " qubits");
    }
}

double Statevector::norm() const {
    double s = 0.0;
    for (const Complex &a : amp_) s += std::norm(a);
    return std::sqrt(s);
}

void Statevector::apply_ry(int qubit, double angle) {
    check_qubit(qubit);
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t n = amp_.size();
    for (std::size_t base = 0; base < n; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const Complex a0 = amp_[i];
            const Complex a1 = amp_[i + stride];
            amp_[i] = c * a0 - s * a1;
            amp_[i + stride] = s * a0 + c * a1;
        }
    }
}

void Statevector::apply_rz(int qubit, double angle) {
    check_qubit(qubit);
    const Complex p0 = std::exp(-kI * (0.5 * angle));
    const Complex p1 = std::exp(kI * (0.5 * angle));
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t n = amp_.size();
    for (std::size_t base = 0; base < n; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            amp_[i] *= p0;
            amp_[i + stride] *= p1;
        }
    }
}

void Statevector::apply_cnot(int control, int target) {
    check_qubit(control);
    check_qubit(target);
    if (control == target) {
        throw std::invalid_argument("cnot control and target must differ");
    }
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t n = amp_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & cbit) && !(i & tbit)) {
            std::swap(amp_[i], amp_[i | tbit]);
        }
    }
}

void Statevector::apply_ring_entanglement() {
    if (n_qubits_ < 2) {
        throw std::invalid_argument("ring entanglement requires at least 2 qubits");
    }
    for (int j = 0; j + 1 < n_qubits_; ++j) {
        apply_cnot(j, j + 1);
    }
    apply_cnot(n_qubits_ - 1, 0);
}

void Statevector::apply_single_qubit(int qubit, const std::array<Complex, 4> &m) {
    check_qubit(qubit);
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t n = amp_.size();
    for (std::size_t base = 0; base < n; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const Complex a0 = amp_[i];
            const Complex a1 = amp_[i + stride];
            amp_[i] = m[0] * a0 + m[1] * a1;
            amp_[i + stride] = m[2] * a0 + m[3] * a1;
        }
    }
}

double Statevector::expectation_z(int qubit) const {
    check_qubit(qubit);
    const std::size_t bit = std::size_t{1} << qubit;
    double e = 0.0;
    for (std::size_t i = 0; i < amp_.size(); ++i) {
        const double p = std::norm(amp_[i]);
        e += (i & bit) ? -p : p;
    }
    return e;
}

Eigen::VectorXd Statevector::expectation_z_all() const {
    Eigen::VectorXd q(n_qubits_);
    for (int j = 0; j < n_qubits_; ++j) q(j) = expectation_z(j);
    return q;
}

void CircuitParams::validate() const {
    const int n = n_qubits();
    if (n < 1) throw std::invalid_argument("circuit needs at least one qubit");
    if (!theta.allFinite()) throw std::invalid_argument("non-finite embedding angle");
    for (std::size_t l = 0; l < omega.size(); ++l) {
        const Eigen::MatrixXd &w = omega[l];
        if (w.rows() != n || w.cols() != 3) {
            throw std::invalid_argument("omega layer " + std::to_string(l) +
                                        " must be n_qubits x 3");
        }
        if (!w.allFinite()) throw std::invalid_argument("non-finite rotation angle");
    }
    if (entanglement && depth() > 0 && n < 2) {
        throw std::invalid_argument("ring entanglement requires at least 2 qubits");
    }
}

std::pair<Statevector, Eigen::VectorXd> run_circuit(const CircuitParams &params) {
    params.validate();
    Statevector st(params.n_qubits());
    for (const GateOp &g : build_gate_list(params)) apply_gate(st, g);
    Eigen::VectorXd q = st.expectation_z_all();
    return {std::move(st), std::move(q)};
}

Eigen::VectorXd circuit_readout(const CircuitParams &params) {
    return run_circuit(params).second;
}

CircuitJacobian circuit_gradients(const CircuitParams &params) {
    params.validate();
    const int n = params.n_qubits();
    const int d = params.depth();
    constexpr double shift = std::numbers::pi / 2.0;

    CircuitJacobian jac;
    jac.dtheta.resize(n, n);
    jac.domega.resize(n, 3 * n * d);

    auto shifted = [&](CircuitParams p) { return circuit_readout(p); };

    for (int j = 0; j < n; ++j) {
        CircuitParams plus = params, minus = params;
        plus.theta(j) += shift;
        minus.theta(j) -= shift;
        jac.dtheta.col(j) = 0.5 * (shifted(plus) - shifted(minus));
    }
    for (int l = 0; l < d; ++l) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < 3; ++k) {
                CircuitParams plus = params, minus = params;
                plus.omega[static_cast<std::size_t>(l)](j, k) += shift;
                minus.omega[static_cast<std::size_t>(l)](j, k) -= shift;
                jac.domega.col(CircuitJacobian::omega_col(n, l, j, k)) =
                    0.5 * (shifted(plus) - shifted(minus));
            }
        }
    }
    return jac;
}

namespace {

// Reverse sweep shared by circuit_backward and circuit_gradients_direct.
//
// For q_i = <psi|Z_i|psi> and L with upstream weights w_i = dL/dq_i,
// dL/da = 2 Re(<phi| dG/da |kappa_before>) where |phi> accumulates
// sum_i w_i Z_i |psi> pulled back through the inverses of the later gates
// and |kappa_before> is the state just before the gate.
Eigen::VectorXd reverse_sweep(const CircuitParams &params,
                              const Eigen::VectorXd &readout_grad) {
    const int n = params.n_qubits();
    if (readout_grad.size() != n) {
        throw std::invalid_argument("readout gradient must have one entry per qubit");
    }
    const std::vector<GateOp> gates = build_gate_list(params);

    Statevector kappa(n);
    for (const GateOp &g : gates) apply_gate(kappa, g);

    // phi = sum_i w_i Z_i |psi>, formed in one diagonal pass.
    Statevector phi = kappa;
    {
        std::vector<Complex> &pa = phi.amplitudes();
        for (std::size_t b = 0; b < pa.size(); ++b) {
            double coeff = 0.0;
            for (int i = 0; i < n; ++i) {
                coeff += (b >> i) & 1 ? -readout_grad(i) : readout_grad(i);
            }
            pa[b] *= coeff;
        }
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.num_angles());
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
        const GateOp &g = *it;
        apply_gate_inverse(kappa, g);
        if (g.slot >= 0) {
            Statevector dpsi = kappa;
            dpsi.apply_single_qubit(g.qubit, gate_derivative(g));
            Complex inner{0.0, 0.0};
            const std::vector<Complex> &pa = phi.amplitudes();
            const std::vector<Complex> &da = dpsi.amplitudes();
            for (std::size_t b = 0; b < pa.size(); ++b) {
                inner += std::conj(pa[b]) * da[b];
            }
            grad(g.slot) = 2.0 * inner.real();
        }
        apply_gate_inverse(phi, g);
    }
    return grad;
}

} // namespace

CircuitGrad circuit_backward(const CircuitParams &params,
                             const Eigen::VectorXd &readout_grad) {
    params.validate();
    const int n = params.n_qubits();
    const Eigen::VectorXd flat = reverse_sweep(params, readout_grad);

    CircuitGrad out;
    out.theta = flat.head(n);
    out.omega.resize(static_cast<std::size_t>(params.depth()));
    for (int l = 0; l < params.depth(); ++l) {
        Eigen::MatrixXd w(n, 3);
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < 3; ++k) {
                w(j, k) = flat(n + (l * n + j) * 3 + k);
            }
        }
        out.omega[static_cast<std::size_t>(l)] = std::move(w);
    }
    return out;
}

CircuitJacobian circuit_gradients_direct(const CircuitParams &params) {
    params.validate();
    const int n = params.n_qubits();
    const int d = params.depth();

    CircuitJacobian jac;
    jac.dtheta.resize(n, n);
    jac.domega.resize(n, 3 * n * d);

    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd flat =
            reverse_sweep(params, Eigen::VectorXd::Unit(n, i));
        jac.dtheta.row(i) = flat.head(n).transpose();
        if (d > 0) jac.domega.row(i) = flat.tail(3 * n * d).transpose();
    }
    return jac;
}

} // namespace vqcast::quantum
