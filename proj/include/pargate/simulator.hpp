#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pargate/common.hpp"

namespace pargate {

// Basis convention project-wide: qubit 1 is the leftmost ket label and the
// most significant bit of the amplitude index.
struct StateVector {
    int n_qubits = 0;
    Eigen::VectorXcd amps;

    static StateVector zero(int n) {
        StateVector s;
        s.n_qubits = n;
        s.amps = Eigen::VectorXcd::Zero(std::int64_t(1) << n);
        s.amps[0] = 1.0;
        return s;
    }
    static StateVector basis(int n, int index) {
        StateVector s = zero(n);
        s.amps[0] = 0.0;
        s.amps[index] = 1.0;
        return s;
    }
    double norm() const { return amps.norm(); }
};

struct Gate {
    enum Kind { R, Rz, XX } kind = R;
    int q1 = 0, q2 = 0;      // 1-based qubit labels
    double theta = 0.0, phi = 0.0, chi = 0.0;

    static Gate r(int q, double theta, double phi) { return {R, q, 0, theta, phi, 0.0}; }
    static Gate rz(int q, double theta) { return {Rz, q, 0, theta, 0.0, 0.0}; }
    static Gate xx(int a, int b, double chi) { return {XX, a, b, 0.0, 0.0, chi}; }
    static Gate ry(int q, double theta) { return r(q, theta, pi / 2); }
    static Gate rx(int q, double theta) { return r(q, theta, 0.0); }
};

struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    // Depth-accounting metadata only; simulation always runs in list order.
    std::vector<std::vector<int>> parallel_groups;
};

namespace detail {

inline void apply_single(StateVector& state, int qubit,
                         const Eigen::Matrix2cd& u) {
    if (qubit < 1 || qubit > state.n_qubits)
        throw ConfigError("qubit index out of range");
    const std::int64_t bit = std::int64_t(1) << (state.n_qubits - qubit);
    const std::int64_t dim = state.amps.size();
    for (std::int64_t i = 0; i < dim; ++i) {
        if (i & bit) continue;
        const cplx a0 = state.amps[i], a1 = state.amps[i | bit];
        state.amps[i] = u(0, 0) * a0 + u(0, 1) * a1;
        state.amps[i | bit] = u(1, 0) * a0 + u(1, 1) * a1;
    }
}

inline Eigen::Matrix2cd r_matrix(double theta, double phi) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    Eigen::Matrix2cd u;
    u << c, cplx(0, -1) * std::exp(cplx(0, -phi)) * s,
        cplx(0, -1) * std::exp(cplx(0, phi)) * s, c;
    return u;
}

inline Eigen::Matrix2cd rz_matrix(double theta) {
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Zero();
    u(0, 0) = std::exp(cplx(0, -theta / 2));
    u(1, 1) = std::exp(cplx(0, theta / 2));
    return u;
}

}  // namespace detail

// Exact gate action; XX(chi) = cos(chi) I - i sin(chi) (X (x) X).
inline void apply(StateVector& state, const Gate& gate) {
    switch (gate.kind) {
        case Gate::R:
            detail::apply_single(state, gate.q1, detail::r_matrix(gate.theta, gate.phi));
            break;
        case Gate::Rz:
            detail::apply_single(state, gate.q1, detail::rz_matrix(gate.theta));
            break;
        case Gate::XX: {
            if (gate.q1 == gate.q2) throw ConfigError("XX needs distinct qubits");
            if (gate.q1 < 1 || gate.q1 > state.n_qubits || gate.q2 < 1 ||
                gate.q2 > state.n_qubits)
                throw ConfigError("qubit index out of range");
            const std::int64_t b1 = std::int64_t(1) << (state.n_qubits - gate.q1);
            const std::int64_t b2 = std::int64_t(1) << (state.n_qubits - gate.q2);
            const cplx c = std::cos(gate.chi);
            const cplx s = cplx(0, -1) * std::sin(gate.chi);
            const std::int64_t dim = state.amps.size();
            Eigen::VectorXcd out(dim);
            for (std::int64_t i = 0; i < dim; ++i)
                out[i] = c * state.amps[i] + s * state.amps[i ^ b1 ^ b2];
            state.amps = std::move(out);
            break;
        }
    }
}

inline void apply(StateVector& state, const Circuit& circuit) {
    for (const Gate& g : circuit.gates) apply(state, g);
}

// ---------------------------------------------------------------------------
// Parity-scan entanglement witness.

struct ParityScan {
    std::vector<double> phases;
    std::vector<double> parities;
    double fit_offset = 0.0;
    double fit_amplitude = 0.0;  // A_Pi
    double fit_phase = 0.0;
    double fit_residual = 0.0;   // max |fit - data|
};

struct AnalysisPulse {
    enum Kind { Plain, SK1 } kind = Plain;
    double epsilon = 0.0;  // fractional rotation-angle error (SK1 demo knob)
};

namespace detail {

// Apply the analysis rotation R(theta, phi), optionally as the three-rotation
// SK1 composite that suppresses the angle error to first order.
inline void analysis_rotation(StateVector& state, int qubit, double theta,
                              double phi, const AnalysisPulse& pulse) {
    const double scale = 1.0 + pulse.epsilon;
    if (pulse.kind == AnalysisPulse::Plain) {
        apply(state, Gate::r(qubit, theta * scale, phi));
        return;
    }
    const double corr = std::acos(-theta / (4 * pi));
    apply(state, Gate::r(qubit, theta * scale, phi));
    apply(state, Gate::r(qubit, 2 * pi * scale, phi + corr));
    apply(state, Gate::r(qubit, 2 * pi * scale, phi - corr));
}

}  // namespace detail

// Prepare |00>, apply XX(chi), scan the phase of a global pi/2 analysis
// rotation, and fit Pi(phi) = c + a cos(2 phi) + b sin(2 phi) by least
// squares. fit_amplitude = hypot(a, b).
inline ParityScan parity_scan(double chi, int n_points,
                              const AnalysisPulse& pulse = {}) {
    if (n_points < 5) throw ConfigError("parity scan needs n_points >= 5");
    ParityScan scan;
    Eigen::MatrixXd basis(n_points, 3);
    Eigen::VectorXd y(n_points);
    for (int m = 0; m < n_points; ++m) {
        const double phi = 2 * pi * m / n_points;
        StateVector state = StateVector::zero(2);
        apply(state, Gate::xx(1, 2, chi));
        detail::analysis_rotation(state, 1, pi / 2, phi, pulse);
        detail::analysis_rotation(state, 2, pi / 2, phi, pulse);
        const double parity = std::norm(state.amps[0]) + std::norm(state.amps[3]) -
                              std::norm(state.amps[1]) - std::norm(state.amps[2]);
        scan.phases.push_back(phi);
        scan.parities.push_back(parity);
        basis(m, 0) = 1.0;
        basis(m, 1) = std::cos(2 * phi);
        basis(m, 2) = std::sin(2 * phi);
        y[m] = parity;
    }
    const Eigen::Vector3d coef =
        (basis.transpose() * basis).ldlt().solve(basis.transpose() * y);
    scan.fit_offset = coef[0];
    scan.fit_amplitude = std::hypot(coef[1], coef[2]);
    scan.fit_phase = std::atan2(coef[2], coef[1]);
    scan.fit_residual = (basis * coef - y).lpNorm<Eigen::Infinity>();
    return scan;
}

// F = rho00 cos^2(chi) + rho33 sin^2(chi) + A_Pi cos(chi) sin(chi).
inline double fidelity_from_parity(double rho00, double rho33, double a_pi,
                                   double chi) {
    const double c = std::cos(chi), s = std::sin(chi);
    return rho00 * c * c + rho33 * s * s + a_pi * c * s;
}

// ---------------------------------------------------------------------------
// Circuit constructions.

// CNOT from one XX(pi/4) plus single-qubit rotations; unitary equals CNOT up
// to a global phase.
inline Circuit compile_cnot(int control, int target, int n_qubits) {
    if (control == target) throw ConfigError("CNOT needs distinct qubits");
    Circuit c;
    c.n_qubits = n_qubits;
    c.gates = {Gate::ry(control, pi / 2), Gate::xx(control, target, pi / 4),
               Gate::rx(control, -pi / 2), Gate::rx(target, -pi / 2),
               Gate::ry(control, -pi / 2)};
    return c;
}

namespace detail {

inline void append(Circuit& dst, const Circuit& src) {
    dst.gates.insert(dst.gates.end(), src.gates.begin(), src.gates.end());
}

// Standard Toffoli decomposition over CNOT + T (each CNOT compiled to XX).
inline Circuit compile_toffoli(int a, int b, int c, int n_qubits) {
    Circuit out;
    out.n_qubits = n_qubits;
    auto t = [&](int q) { out.gates.push_back(Gate::rz(q, pi / 4)); };
    auto tdg = [&](int q) { out.gates.push_back(Gate::rz(q, -pi / 4)); };
    auto h = [&](int q) {  // H up to global phase: Rz(pi) then Ry(pi/2)
        out.gates.push_back(Gate::rz(q, pi));
        out.gates.push_back(Gate::ry(q, pi / 2));
    };
    auto cnot = [&](int ctl, int tgt) { append(out, compile_cnot(ctl, tgt, n_qubits)); };
    h(c);
    cnot(b, c); tdg(c);
    cnot(a, c); t(c);
    cnot(b, c); tdg(c);
    cnot(a, c);
    t(b); t(c); h(c);
    cnot(a, b);
    t(a); tdg(b);
    cnot(a, b);
    return out;
}

}  // namespace detail

// Truth table: one probability row per basis input, qubit 1 = MSB labels.
struct TruthTable {
    int n_qubits = 0;
    std::vector<int> inputs;   // basis indices of the prepared states
    Eigen::MatrixXd probs;     // inputs.size() x 2^n
};

inline TruthTable run_circuit_table(const Circuit& circuit,
                                    const std::vector<int>& inputs) {
    TruthTable table;
    table.n_qubits = circuit.n_qubits;
    table.inputs = inputs;
    table.probs.resize(int(inputs.size()), std::int64_t(1) << circuit.n_qubits);
    for (size_t r = 0; r < inputs.size(); ++r) {
        StateVector state = StateVector::basis(circuit.n_qubits, inputs[r]);
        apply(state, circuit);
        for (int j = 0; j < state.amps.size(); ++j)
            table.probs(int(r), j) = std::norm(state.amps[j]);
    }
    return table;
}

// CNOT(1 -> 4) and CNOT(2 -> 3) executed in the same window, over all 16
// basis inputs.
inline Circuit parallel_cnots_circuit() {
    Circuit c = compile_cnot(1, 4, 4);
    const int split = int(c.gates.size());
    detail::append(c, compile_cnot(2, 3, 4));
    c.parallel_groups = {{0, split}};
    return c;
}

inline TruthTable run_parallel_cnots() {
    std::vector<int> inputs(16);
    for (int i = 0; i < 16; ++i) inputs[i] = i;
    return run_circuit_table(parallel_cnots_circuit(), inputs);
}

enum class AdderVariant { Feynman, Optimized };

// Full adder on |x y Cin 0>, outputs read as |x y' S Cout>.
inline Circuit adder_circuit(AdderVariant variant) {
    Circuit c;
    c.n_qubits = 4;
    if (variant == AdderVariant::Feynman) {
        detail::append(c, detail::compile_toffoli(1, 2, 4, 4));
        detail::append(c, compile_cnot(1, 2, 4));
        detail::append(c, detail::compile_toffoli(2, 3, 4, 4));
        detail::append(c, compile_cnot(2, 3, 4));
        return c;
    }
    // Depth-4 application-optimized variant (gate-for-gate transcription).
    c.gates = {
        Gate::rz(1, -3 * pi / 4), Gate::rz(2, -pi / 4), Gate::rz(3, pi / 4),
        Gate::rx(4, -pi / 2),
        Gate::ry(1, pi / 2), Gate::ry(2, pi / 2), Gate::ry(3, pi / 2),
        Gate::xx(2, 4, pi / 8),
        Gate::ry(2, -pi / 2),
        Gate::xx(1, 2, pi / 4), Gate::xx(3, 4, pi / 8),
        Gate::rz(2, -pi / 2), Gate::rz(3, -pi / 2),
        Gate::xx(1, 4, pi / 8), Gate::xx(2, 3, pi / 4),
        Gate::ry(1, -pi / 2), Gate::ry(2, pi / 2), Gate::ry(3, pi / 2),
        Gate::xx(3, 4, -pi / 8),
        Gate::rz(2, pi), Gate::ry(3, -pi / 2),
        Gate::rz(3, pi / 4),
    };
    c.parallel_groups = {{9, 10}, {13, 14}};
    return c;
}

inline TruthTable run_adder(AdderVariant variant) {
    std::vector<int> inputs;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int cin = 0; cin < 2; ++cin)
                inputs.push_back((x << 3) | (y << 2) | (cin << 1));
    return run_circuit_table(adder_circuit(variant), inputs);
}

// Classical full-adder expectation: input |x y Cin 0> maps to |x y' S Cout>.
inline std::map<int, int> adder_expected_outputs() {
    std::map<int, int> expected;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int cin = 0; cin < 2; ++cin) {
                const int in = (x << 3) | (y << 2) | (cin << 1);
                const int sum = x ^ y ^ cin;
                const int cout = (x & y) ^ (cin & (x ^ y));
                expected[in] = (x << 3) | ((x ^ y) << 2) | (sum << 1) | cout;
            }
    return expected;
}

// The six commuting XX(pi/4) gates over all pairs of 4 qubits.
inline Circuit ghz_circuit() {
    Circuit c;
    c.n_qubits = 4;
    for (int a = 1; a <= 4; ++a)
        for (int b = a + 1; b <= 4; ++b)
            c.gates.push_back(Gate::xx(a, b, pi / 4));
    return c;
}

// Full unitary of a circuit by columns (small n only).
inline Eigen::MatrixXcd circuit_unitary(const Circuit& circuit) {
    const std::int64_t dim = std::int64_t(1) << circuit.n_qubits;
    Eigen::MatrixXcd u(dim, dim);
    for (std::int64_t col = 0; col < dim; ++col) {
        StateVector state = StateVector::basis(circuit.n_qubits, int(col));
        apply(state, circuit);
        u.col(col) = state.amps;
    }
    return u;
}

// exp(i pi/4) (I + i X^(x)4) / sqrt(2), the closed form of the six-gate
// composition: the summed generator is ((sum X)^2 - 4)/2, whose spectrum
// collapses to this single entangling unitary.
inline Eigen::MatrixXcd ghz_target_unitary() {
    // X^(x)4 is the bit-complement permutation.
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(16, 16);
    const cplx phase = std::exp(cplx(0, pi / 4));
    for (int i = 0; i < 16; ++i) {
        u(i, i) = phase;
        u(i, 15 - i) += phase * cplx(0, 1);
    }
    return u / std::sqrt(2.0);
}

// Six XX(pi/4) gates then Rz(-pi/2) on qubit 1; checks the composed unitary
// against the closed-form target before the Rz and returns the final state,
// which is (|0000> + |1111>)/sqrt(2) up to a global phase.
inline StateVector run_ghz() {
    const Circuit c = ghz_circuit();
    const Eigen::MatrixXcd u = circuit_unitary(c);
    if ((u - ghz_target_unitary()).lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::logic_error("GHZ composition deviates from closed form");
    StateVector state = StateVector::zero(4);
    apply(state, c);
    apply(state, Gate::rz(1, -pi / 2));
    return state;
}

// Mean probability of the expected output bitstring over all table inputs.
inline double truth_table_fidelity(const TruthTable& table,
                                   const std::map<int, int>& expected) {
    double total = 0.0;
    for (size_t r = 0; r < table.inputs.size(); ++r) {
        const double row_sum = table.probs.row(int(r)).sum();
        if (std::abs(row_sum - 1.0) > 1e-9)
            throw ConfigError("truth table row is not a probability distribution");
        total += table.probs(int(r), expected.at(table.inputs[r]));
    }
    return total / double(table.inputs.size());
}

}  // namespace pargate
