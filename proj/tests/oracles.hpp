// Independent numerical oracles used only by the test suite: adaptive
// quadrature for the kernel integrals and a truncated-Fock thermal
// displacement model for the fidelity formulas.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "pargate/common.hpp"

namespace oracles {

using pargate::cplx;

// Composite Gauss-Legendre rule with the subdivision chosen from the total
// phase of the integrand, so oscillatory integrands stay cheap and accurate
// without adaptive recursion. Nodes are returned in increasing order.
inline std::vector<std::pair<double, double>> composite_nodes(double a, double b,
                                                              double phase) {
    using rule = boost::math::quadrature::gauss<double, 15>;
    const int n_sub = int(std::ceil(std::abs(phase) / 4.0)) + 2;
    const double h = (b - a) / n_sub;
    std::vector<std::pair<double, double>> nodes;
    nodes.reserve(size_t(n_sub) * 15);
    for (int j = 0; j < n_sub; ++j) {
        const double mid = a + (j + 0.5) * h;
        for (int m = 7; m >= 1; --m)
            nodes.emplace_back(mid - 0.5 * h * rule::abscissa()[m],
                               0.5 * h * rule::weights()[m]);
        nodes.emplace_back(mid, 0.5 * h * rule::weights()[0]);
        for (int m = 1; m <= 7; ++m)
            nodes.emplace_back(mid + 0.5 * h * rule::abscissa()[m],
                               0.5 * h * rule::weights()[m]);
    }
    return nodes;
}

template <class F>
double quad_osc(F&& f, double a, double b, double freq) {
    double sum = 0.0;
    for (const auto& [x, wt] : composite_nodes(a, b, freq * (b - a))) sum += wt * f(x);
    return sum;
}

// Integral of sin(mu t) e^{i w t} over [u0, u1].
inline cplx spin_motion_quad(double mu, double w, double u0, double u1) {
    const double fr = std::abs(mu) + std::abs(w);
    const double re = quad_osc([&](double t) { return std::sin(mu * t) * std::cos(w * t); },
                               u0, u1, fr);
    const double im = quad_osc([&](double t) { return std::sin(mu * t) * std::sin(w * t); },
                               u0, u1, fr);
    return {re, im};
}

// Integral of sin(mu t) sin(mu t') sin(w (t' - t)) over [a0,a1] x [b0,b1]
// (t in the a-segment, t' in the b-segment). The difference angle is expanded
// so the double integral factorizes into products of 1D integrals.
inline double spin_spin_rect_quad(double mu, double w, double a0, double a1,
                                  double b0, double b1) {
    const double fr = std::abs(mu) + std::abs(w);
    const auto sc = [&](double t) { return std::sin(mu * t) * std::cos(w * t); };
    const auto ss = [&](double t) { return std::sin(mu * t) * std::sin(w * t); };
    return quad_osc(ss, b0, b1, fr) * quad_osc(sc, a0, a1, fr) -
           quad_osc(sc, b0, b1, fr) * quad_osc(ss, a0, a1, fr);
}

// Same integrand over the triangle u0 <= t <= t' <= u1. A single ordered pass
// over the outer nodes carries the inner integrals cumulatively, so the cost
// stays linear in the node count.
inline double spin_spin_diag_quad(double mu, double w, double u0, double u1) {
    const double fr = std::abs(mu) + std::abs(w);
    const auto sc = [&](double t) { return std::sin(mu * t) * std::cos(w * t); };
    const auto ss = [&](double t) { return std::sin(mu * t) * std::sin(w * t); };
    double cum_sc = 0.0, cum_ss = 0.0;  // integrals from u0 to the current node
    double prev = u0, sum = 0.0;
    for (const auto& [tp, wt] : composite_nodes(u0, u1, 4.0 * fr * (u1 - u0))) {
        cum_sc += quad_osc(sc, prev, tp, fr);
        cum_ss += quad_osc(ss, prev, tp, fr);
        prev = tp;
        sum += wt * std::sin(mu * tp) *
               (std::sin(w * tp) * cum_sc - std::cos(w * tp) * cum_ss);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Truncated-Fock thermal displacement machinery.

inline Eigen::MatrixXcd displacement(cplx beta, int cutoff) {
    Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) {
        gen(n, n - 1) = beta * std::sqrt(double(n));              // beta a^dag
        gen(n - 1, n) = -std::conj(beta) * std::sqrt(double(n));  // -beta* a
    }
    return gen.exp();
}

inline Eigen::VectorXd thermal_populations(double nbar, int cutoff) {
    Eigen::VectorXd p(cutoff);
    for (int n = 0; n < cutoff; ++n)
        p[n] = std::pow(nbar / (nbar + 1.0), n) / (nbar + 1.0);
    p /= p.sum();
    return p;
}

// Tr[rho_thermal D(disp)] in a truncated Fock space.
inline double thermal_displacement_expectation(cplx disp, double nbar, int cutoff) {
    const Eigen::MatrixXcd d = displacement(disp, cutoff);
    const Eigen::VectorXd p = thermal_populations(nbar, cutoff);
    cplx tr = 0.0;
    for (int n = 0; n < cutoff; ++n) tr += p[n] * d(n, n);
    return tr.real();
}

// Exact (up to Fock truncation) fidelity of the 4-ion operation against the
// ideal spin unitary, motion traced over per-mode thermal states. Works in
// the sigma-x product basis where the evolution is diagonal in spin.
inline double exact_fidelity(const Eigen::MatrixXcd& alphas,   // 4 x N
                             const std::array<double, 6>& chis,
                             const std::array<double, 6>& ideals,
                             const Eigen::VectorXd& nbar, int cutoff) {
    constexpr std::array<std::array<int, 2>, 6> slots = {
        {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    const int n_modes = int(alphas.cols());
    std::array<std::array<int, 4>, 16> sgn{};
    for (int s = 0; s < 16; ++s)
        for (int i = 0; i < 4; ++i) sgn[s][i] = 1 - 2 * ((s >> i) & 1);

    std::array<double, 16> theta{}, theta_id{};
    for (int s = 0; s < 16; ++s) {
        for (int p = 0; p < 6; ++p) {
            const int prod = sgn[s][slots[p][0]] * sgn[s][slots[p][1]];
            theta[s] += chis[p] * prod;
            theta_id[s] += ideals[p] * prod;
        }
    }

    Eigen::MatrixXcd overlap = Eigen::MatrixXcd::Ones(16, 16);
    for (int k = 0; k < n_modes; ++k) {
        const Eigen::VectorXd pop = thermal_populations(nbar[k], cutoff);
        std::array<Eigen::MatrixXcd, 16> disp;
        for (int s = 0; s < 16; ++s) {
            cplx beta = 0.0;
            for (int i = 0; i < 4; ++i) beta += double(sgn[s][i]) * alphas(i, k);
            disp[s] = displacement(beta, cutoff);
        }
        for (int s = 0; s < 16; ++s) {
            for (int sp = 0; sp < 16; ++sp) {
                // Tr[D_s rho D_sp^dag]
                cplx tr = 0.0;
                const Eigen::MatrixXcd prod = disp[s] * pop.asDiagonal() *
                                              disp[sp].adjoint();
                for (int n = 0; n < cutoff; ++n) tr += prod(n, n);
                overlap(s, sp) *= tr;
            }
        }
    }

    cplx f = 0.0;
    for (int s = 0; s < 16; ++s)
        for (int sp = 0; sp < 16; ++sp)
            f += (1.0 / 256.0) *
                 std::exp(cplx(0, -theta_id[s] + theta_id[sp] + theta[s] - theta[sp])) *
                 overlap(s, sp);
    return f.real();
}

}  // namespace oracles
