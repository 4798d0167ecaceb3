/**
 * @file statevec.hpp
 * @brief Dense statevector simulator for small registers.
 *
 * Conventions:
 * - qubit 0 is the least significant bit of the basis index;
 * - rotations are RP(t) = exp(-i t P / 2) for P in {X, Y, Z};
 * - PHASE(t) = diag(1, e^{i t}).
 *
 * Gates are applied in place, O(2^n) per gate, without fusion.
 */
#pragma once

#include "qbench/errors.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qbench {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 24;

enum class GateKind { RX, RY, RZ, H, CNOT, CZ, PHASE };

constexpr bool is_two_qubit(GateKind k) { return k == GateKind::CNOT || k == GateKind::CZ; }
constexpr bool is_parameterized(GateKind k) {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ || k == GateKind::PHASE;
}

inline std::string_view gate_name(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::H: return "H";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
        case GateKind::PHASE: return "PHASE";
    }
    return "?";
}

/// A concrete gate. For CNOT/CZ `q0` is the control and `q1` the target;
/// single-qubit gates leave `q1` at -1.
struct Gate {
    GateKind kind = GateKind::H;
    int q0 = 0;
    int q1 = -1;
    double angle = 0.0;

    static Gate rx(int q, double t) { return {GateKind::RX, q, -1, t}; }
    static Gate ry(int q, double t) { return {GateKind::RY, q, -1, t}; }
    static Gate rz(int q, double t) { return {GateKind::RZ, q, -1, t}; }
    static Gate phase(int q, double t) { return {GateKind::PHASE, q, -1, t}; }
    static Gate h(int q) { return {GateKind::H, q, -1, 0.0}; }
    static Gate cnot(int c, int t) { return {GateKind::CNOT, c, t, 0.0}; }
    static Gate cz(int a, int b) { return {GateKind::CZ, a, b, 0.0}; }

    friend bool operator==(const Gate&, const Gate&) = default;
};

/// 2x2 unitary of a single-qubit gate, row-major.
inline std::array<Complex, 4> single_qubit_matrix(const Gate& g) {
    const double c = std::cos(g.angle / 2.0);
    const double s = std::sin(g.angle / 2.0);
    const Complex i{0.0, 1.0};
    switch (g.kind) {
        case GateKind::RX: return {Complex{c}, -i * s, -i * s, Complex{c}};
        case GateKind::RY: return {Complex{c}, Complex{-s}, Complex{s}, Complex{c}};
        case GateKind::RZ: return {std::polar(1.0, -g.angle / 2.0), 0.0, 0.0, std::polar(1.0, g.angle / 2.0)};
        case GateKind::PHASE: return {1.0, 0.0, 0.0, std::polar(1.0, g.angle)};
        case GateKind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            return {r, r, r, -r};
        }
        default: throw UsageError("single_qubit_matrix: " + std::string(gate_name(g.kind)) + " is a two-qubit gate");
    }
}

class StateVector {
public:
    /// |0...0> on `n_qubits` qubits.
    explicit StateVector(int n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits)
            throw ConfigError("StateVector: n_qubits must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                              std::to_string(n_qubits));
        amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
        amps_[0] = 1.0;
    }

    int n_qubits() const noexcept { return n_qubits_; }
    std::size_t dim() const noexcept { return amps_.size(); }
    const std::vector<Complex>& amplitudes() const noexcept { return amps_; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }
    Complex& operator[](std::size_t i) { return amps_[i]; }

    void reset() {
        std::fill(amps_.begin(), amps_.end(), Complex{0.0, 0.0});
        amps_[0] = 1.0;
    }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }

    void apply(const Gate& g) {
        check_targets(g);
        switch (g.kind) {
            case GateKind::CNOT: apply_cnot(g.q0, g.q1); return;
            case GateKind::CZ: apply_cz(g.q0, g.q1); return;
            case GateKind::RZ:
            case GateKind::PHASE: {
                const auto m = single_qubit_matrix(g);
                apply_diagonal(g.q0, m[0], m[3]);
                return;
            }
            default: apply_single(g.q0, single_qubit_matrix(g)); return;
        }
    }

    template <class Range>
    void apply_all(const Range& gates) {
        for (const Gate& g : gates) apply(g);
    }

private:
    void check_targets(const Gate& g) const {
        auto bad = [&](int q) { return q < 0 || q >= n_qubits_; };
        if (bad(g.q0)) throw UsageError("gate " + std::string(gate_name(g.kind)) + ": qubit " + std::to_string(g.q0) + " out of range");
        if (is_two_qubit(g.kind)) {
            if (bad(g.q1)) throw UsageError("gate " + std::string(gate_name(g.kind)) + ": qubit " + std::to_string(g.q1) + " out of range");
            if (g.q0 == g.q1) throw UsageError("gate " + std::string(gate_name(g.kind)) + ": control equals target");
        }
    }

    void apply_single(int q, const std::array<Complex, 4>& m) {
        const std::size_t stride = std::size_t{1} << q;
        const std::size_t n = amps_.size();
        for (std::size_t base = 0; base < n; base += 2 * stride) {
            for (std::size_t i = base; i < base + stride; ++i) {
                const Complex a0 = amps_[i];
                const Complex a1 = amps_[i + stride];
                amps_[i] = m[0] * a0 + m[1] * a1;
                amps_[i + stride] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    void apply_diagonal(int q, Complex d0, Complex d1) {
        const std::size_t mask = std::size_t{1} << q;
        for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] *= (i & mask) ? d1 : d0;
    }

    void apply_cnot(int control, int target) {
        const std::size_t cm = std::size_t{1} << control;
        const std::size_t tm = std::size_t{1} << target;
        for (std::size_t i = 0; i < amps_.size(); ++i)
            if ((i & cm) && !(i & tm)) std::swap(amps_[i], amps_[i | tm]);
    }

    void apply_cz(int a, int b) {
        const std::size_t m = (std::size_t{1} << a) | (std::size_t{1} << b);
        for (std::size_t i = 0; i < amps_.size(); ++i)
            if ((i & m) == m) amps_[i] = -amps_[i];
    }

    int n_qubits_;
    std::vector<Complex> amps_;
};

inline StateVector zero_state(int n_qubits) { return StateVector(n_qubits); }

inline StateVector apply_gate(StateVector state, const Gate& gate) {
    state.apply(gate);
    return state;
}

/// <Z_q> = sum |a_i|^2 * (+1 if bit q of i is 0 else -1).
inline double expectation_z(const StateVector& state, int qubit) {
    if (qubit < 0 || qubit >= state.n_qubits())
        throw UsageError("expectation_z: qubit " + std::to_string(qubit) + " out of range");
    const std::size_t mask = std::size_t{1} << qubit;
    double e = 0.0;
    const auto& a = state.amplitudes();
    for (std::size_t i = 0; i < a.size(); ++i) e += (i & mask) ? -std::norm(a[i]) : std::norm(a[i]);
    return e;
}

inline double ground_state_probability(const StateVector& state) { return std::norm(state[0]); }

}  // namespace qbench
