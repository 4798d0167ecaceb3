#include "qbench/statevec.hpp"
#include "qbench/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qbench;
using std::numbers::pi;

namespace {

constexpr double kTol = 1e-12;

void expect_amp(const StateVector& s, std::size_t i, Complex want, double tol = kTol) {
    EXPECT_NEAR(s[i].real(), want.real(), tol) << "index " << i;
    EXPECT_NEAR(s[i].imag(), want.imag(), tol) << "index " << i;
}

}  // namespace

TEST(StateVector, StartsInGroundState) {
    const StateVector s(3);
    EXPECT_EQ(s.dim(), 8u);
    expect_amp(s, 0, 1.0);
    for (std::size_t i = 1; i < s.dim(); ++i) expect_amp(s, i, 0.0);
}

TEST(StateVector, RejectsBadQubitCounts) {
    EXPECT_THROW(StateVector(0), ConfigError);
    EXPECT_THROW(StateVector(kMaxQubits + 1), ConfigError);
}

TEST(StateVector, QubitZeroIsLeastSignificant) {
    StateVector s(3);
    s.apply(Gate::rx(0, pi));
    expect_amp(s, 1, Complex(0.0, -1.0));
    s.reset();
    s.apply(Gate::rx(2, pi));
    expect_amp(s, 4, Complex(0.0, -1.0));
}

TEST(StateVector, HadamardSuperposition) {
    StateVector s(1);
    s.apply(Gate::h(0));
    expect_amp(s, 0, 1 / std::sqrt(2.0));
    expect_amp(s, 1, 1 / std::sqrt(2.0));
    s.apply(Gate::h(0));
    expect_amp(s, 0, 1.0);
}

TEST(StateVector, RotationConventionIsHalfAngle) {
    StateVector s(1);
    s.apply(Gate::ry(0, pi / 2));
    expect_amp(s, 0, std::cos(pi / 4));
    expect_amp(s, 1, std::sin(pi / 4));

    StateVector z(1);
    z.apply(Gate::h(0));
    z.apply(Gate::rz(0, 0.7));
    expect_amp(z, 0, std::exp(Complex(0, -0.35)) / std::sqrt(2.0));
    expect_amp(z, 1, std::exp(Complex(0, 0.35)) / std::sqrt(2.0));
}

TEST(StateVector, PhaseEqualsRzUpToGlobalPhase) {
    StateVector a(1), b(1);
    a.apply(Gate::h(0));
    b.apply(Gate::h(0));
    a.apply(Gate::phase(0, 1.1));
    b.apply(Gate::rz(0, 1.1));
    const Complex g = std::exp(Complex(0, 0.55));
    for (std::size_t i = 0; i < 2; ++i) expect_amp(a, i, g * b[i]);
}

TEST(StateVector, CnotFlipsTargetWhenControlSet) {
    StateVector s(2);
    s.apply(Gate::rx(0, pi));  // |01> up to phase
    s.apply(Gate::cnot(0, 1));
    expect_amp(s, 3, Complex(0.0, -1.0));
    expect_amp(s, 1, 0.0);
}

TEST(StateVector, CnotIgnoresClearedControl) {
    StateVector s(2);
    s.apply(Gate::rx(1, pi));
    s.apply(Gate::cnot(0, 1));
    expect_amp(s, 2, Complex(0.0, -1.0));
}

TEST(StateVector, CzIsSymmetric) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        StateVector a(3);
        for (int g = 0; g < 10; ++g) a.apply(oracle::random_gate(3, rng));
        StateVector b = a;
        a.apply(Gate::cz(0, 2));
        b.apply(Gate::cz(2, 0));
        for (std::size_t i = 0; i < a.dim(); ++i) expect_amp(a, i, b[i]);
    }
}

TEST(StateVector, InvalidTargetsThrow) {
    StateVector s(2);
    EXPECT_THROW(s.apply(Gate::rx(2, 0.1)), UsageError);
    EXPECT_THROW(s.apply(Gate::rx(-1, 0.1)), UsageError);
    EXPECT_THROW(s.apply(Gate::cnot(0, 0)), UsageError);
    EXPECT_THROW(s.apply(Gate::cz(1, 5)), UsageError);
}

TEST(StateVector, ApplyGateLeavesInputUntouched) {
    const StateVector s(1);
    const StateVector t = apply_gate(s, Gate::h(0));
    expect_amp(s, 0, 1.0);
    expect_amp(t, 1, 1 / std::sqrt(2.0));
}

TEST(StateVector, ExpectationZ) {
    StateVector s(2);
    EXPECT_NEAR(expectation_z(s, 0), 1.0, kTol);
    s.apply(Gate::rx(1, pi));
    EXPECT_NEAR(expectation_z(s, 1), -1.0, kTol);
    EXPECT_NEAR(expectation_z(s, 0), 1.0, kTol);
    s.apply(Gate::ry(0, pi / 2));
    EXPECT_NEAR(expectation_z(s, 0), 0.0, kTol);
}

TEST(StateVectorProperty, NormPreservedByRandomCircuits) {
    std::mt19937_64 rng(11);
    for (int c = 0; c < 100; ++c) {
        const int n = 1 + c % 5;
        StateVector s(n);
        for (int g = 0; g < 40; ++g) s.apply(oracle::random_gate(n, rng));
        EXPECT_NEAR(s.norm(), 1.0, 1e-12);
    }
}

TEST(StateVectorProperty, MatchesDenseUnitaryOracle) {
    std::mt19937_64 rng(5);
    for (int c = 0; c < 60; ++c) {
        const int n = 1 + c % 4;
        std::vector<Gate> gates;
        for (int g = 0; g < 30; ++g) gates.push_back(oracle::random_gate(n, rng));
        StateVector s(n);
        s.apply_all(gates);
        const oracle::CMat u = oracle::circuit_unitary(n, gates);
        for (std::size_t i = 0; i < s.dim(); ++i) {
            const Complex want = u(static_cast<Eigen::Index>(i), 0);
            EXPECT_LT(std::abs(s[i] - want), 1e-10);
        }
    }
}

TEST(StateVectorProperty, RotationInverseRestoresState) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> a(-7, 7);
    for (GateKind k : {GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::PHASE}) {
        StateVector s(2);
        s.apply(Gate::h(0));
        s.apply(Gate::cnot(0, 1));
        const StateVector before = s;
        const double t = a(rng);
        s.apply({k, 1, -1, t});
        s.apply({k, 1, -1, -t});
        for (std::size_t i = 0; i < s.dim(); ++i) EXPECT_LT(std::abs(s[i] - before[i]), 1e-12);
    }
}
