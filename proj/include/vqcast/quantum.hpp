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

#include <array>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vqcast::quantum {

using Complex = std::complex<double>;

/// Exact statevector of an n-qubit register, stored as 2^n complex
/// amplitudes in double precision.
///
/// Qubit k addresses bit position k of the basis index (qubit 0 is the
/// least significant bit). Gate application is done in place; only
/// |amplitude|^2 and Pauli-Z expectations are observable, global phase is
/// never normalized away.
class Statevector {
  public:
    /// Initializes |0...0>.
    explicit Statevector(int n_qubits);

    int num_qubits() const { return n_qubits_; }
    std::size_t size() const { return amp_.size(); }

    const std::vector<Complex> &amplitudes() const { return amp_; }
    std::vector<Complex> &amplitudes() { return amp_; }
    Complex amplitude(std::size_t basis) const { return amp_[basis]; }

    double norm() const;

    /// R_y(a) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]
    void apply_ry(int qubit, double angle);
    /// R_z(a) = diag(e^{-ia/2}, e^{+ia/2})
    void apply_rz(int qubit, double angle);
    void apply_cnot(int control, int target);
    /// CNOT chain over neighbours 0->1, 1->2, ..., n-2->n-1, closed by
    /// n-1->0, applied in that order. Requires at least 2 qubits.
    void apply_ring_entanglement();

    /// Applies an arbitrary (possibly non-unitary) 2x2 operator
    /// [[m00, m01], [m10, m11]] to one qubit. Used for derivative
    /// propagation; does not preserve the norm in general.
    void apply_single_qubit(int qubit, const std::array<Complex, 4> &m);

    /// <Z_q> = P(bit q = 0) - P(bit q = 1), always in [-1, 1].
    double expectation_z(int qubit) const;
    Eigen::VectorXd expectation_z_all() const;

  private:
    void check_qubit(int qubit) const;

    int n_qubits_;
    std::vector<Complex> amp_;
};

/// Angles of one circuit instance: the per-qubit embedding rotations and
/// the trainable rotation triplets of every repetition.
struct CircuitParams {
    /// Embedding angle per qubit, applied as R_y.
    Eigen::VectorXd theta;
    /// One n_qubits x 3 matrix per repetition; columns are the
    /// (alpha, beta, gamma) angles of the Rz-Ry-Rz rotation of each qubit.
    std::vector<Eigen::MatrixXd> omega;
    bool entanglement = true;

    int n_qubits() const { return static_cast<int>(theta.size()); }
    int depth() const { return static_cast<int>(omega.size()); }
    /// Total trainable angle count: n_qubits * (1 + 3 * depth).
    int num_angles() const { return n_qubits() * (1 + 3 * depth()); }

    /// Throws std::invalid_argument on shape mismatch or non-finite angles.
    void validate() const;
};

/// Runs the circuit from |0...0>: the R_y(theta) embedding on every qubit,
/// then for each repetition the per-qubit product Rz(alpha) Ry(beta)
/// Rz(gamma) (gamma side applied first) followed by the entangling ring
/// when enabled. Returns the final state and the Pauli-Z readout vector.
std::pair<Statevector, Eigen::VectorXd> run_circuit(const CircuitParams &params);

/// Readout only; convenience wrapper around run_circuit.
Eigen::VectorXd circuit_readout(const CircuitParams &params);

/// Jacobian of the readout with respect to every circuit angle.
///
/// dtheta(i, j)          = d<Z_i> / d theta_j
/// domega(i, col(l,j,k)) = d<Z_i> / d omega_{l,j,k}
/// with col(l, j, k) = (l * n_qubits + j) * 3 + k and k indexing
/// (alpha, beta, gamma).
struct CircuitJacobian {
    Eigen::MatrixXd dtheta;
    Eigen::MatrixXd domega;

    static int omega_col(int n_qubits, int layer, int qubit, int comp) {
        return (layer * n_qubits + qubit) * 3 + comp;
    }
};

/// Exact Jacobian via the parameter-shift rule: every angle enters through
/// an R_y/R_z generator, so d<Z_i>/da = (<Z_i>|_{a+pi/2} - <Z_i>|_{a-pi/2}) / 2.
CircuitJacobian circuit_gradients(const CircuitParams &params);

/// Exact Jacobian via direct differentiation through the statevector
/// (reverse sweep over the gate list). Independent of the shift rule;
/// the two agree to near machine precision.
CircuitJacobian circuit_gradients_direct(const CircuitParams &params);

/// Gradients of a scalar loss with respect to the circuit angles, given
/// the upstream gradient dL/dq of the readout. Single reverse sweep; this
/// is the fast path used during training.
struct CircuitGrad {
    Eigen::VectorXd theta;               // n_qubits
    std::vector<Eigen::MatrixXd> omega;  // depth entries, n_qubits x 3
};
CircuitGrad circuit_backward(const CircuitParams &params,
                             const Eigen::VectorXd &readout_grad);

} // namespace vqcast::quantum
