#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "pargate/common.hpp"

namespace pargate {

// Pairwise slots over the four involved ions (i,j,m,n) = (0,1,2,3):
// order (ij, im, in, jm, jn, mn).
inline constexpr std::array<std::array<int, 2>, 6> kPairSlots = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// Residual displacements and entangling angles of a 4-ion parallel operation.
struct InteractionSummary {
    Eigen::MatrixXcd alphas;            // 4 x N
    std::array<double, 6> chis{};       // achieved, slot order above
    std::array<double, 6> chi_ideals{}; // targets (crosstalk slots 0 for
                                        // parallel mode, all pi/4 for GHZ)
};

// Inverse mode temperature parameterized by mean phonon number:
// coth((1/2) ln(1 + 1/nbar)) simplifies exactly to 2 nbar + 1.
inline double beta_of(double nbar) {
    if (nbar < 0.0) throw ConfigError("nbar must be non-negative");
    return 2.0 * nbar + 1.0;
}

struct ThermalSpec {
    Eigen::VectorXd beta;  // per mode, >= 1

    static ThermalSpec from_nbar(const Eigen::VectorXd& nbar) {
        ThermalSpec t;
        t.beta.resize(nbar.size());
        for (int k = 0; k < nbar.size(); ++k) t.beta[k] = beta_of(nbar[k]);
        return t;
    }
};

// Thermal decoherence weight of an unclosed collective displacement:
// exp(-(1/2) sum_k beta_k |2 sum_i A_i alpha_{i,k}|^2), A_i in {-1,0,+1}.
inline double gamma_factor(const InteractionSummary& summary,
                           const ThermalSpec& thermal,
                           const std::array<int, 4>& signs) {
    if (summary.alphas.rows() != 4)
        throw ConfigError("summary must cover exactly 4 ions");
    if (thermal.beta.size() != summary.alphas.cols())
        throw ConfigError("thermal spec does not match mode count");
    double expo = 0.0;
    for (int k = 0; k < summary.alphas.cols(); ++k) {
        cplx disp = 0.0;
        for (int i = 0; i < 4; ++i)
            disp += double(signs[i]) * summary.alphas(i, k);
        expo += thermal.beta[k] * std::norm(2.0 * disp);
    }
    return std::exp(-0.5 * expo);
}

namespace detail {

// Core fidelity sum over the 16 x 16 sigma-x product sign patterns:
// F = (1/256) sum_{s,s'} Gamma_{(s-s')/2} cos(sum_p dchi_p (sig_p(s)-sig_p(s')))
// where sig_p(s) is the product of the pair's two signs. Algebraically equal
// to the grouped 8 + 8 Gamma + 28-cosine-term closed form (see
// fidelity_term_table below, which performs that grouping explicitly).
inline double fidelity_core(const InteractionSummary& summary,
                            const ThermalSpec& thermal) {
    std::array<double, 6> dchi{};
    for (int p = 0; p < 6; ++p) dchi[p] = summary.chis[p] - summary.chi_ideals[p];

    std::array<std::array<int, 4>, 16> sgn{};
    std::array<std::array<int, 6>, 16> sig{};
    for (int s = 0; s < 16; ++s) {
        for (int i = 0; i < 4; ++i) sgn[s][i] = 1 - 2 * ((s >> i) & 1);
        for (int p = 0; p < 6; ++p)
            sig[s][p] = sgn[s][kPairSlots[p][0]] * sgn[s][kPairSlots[p][1]];
    }

    // Gamma depends only on the 81 difference patterns; cache by key.
    std::array<double, 81> gamma_cache;
    std::array<bool, 81> have{};
    double total = 0.0;
    for (int s = 0; s < 16; ++s) {
        for (int sp = 0; sp < 16; ++sp) {
            std::array<int, 4> a{};
            int key = 0;
            for (int i = 0; i < 4; ++i) {
                a[i] = (sgn[s][i] - sgn[sp][i]) / 2;
                key = key * 3 + (a[i] + 1);
            }
            if (!have[key]) {
                gamma_cache[key] = gamma_factor(summary, thermal, a);
                have[key] = true;
            }
            double arg = 0.0;
            for (int p = 0; p < 6; ++p)
                arg += dchi[p] * double(sig[s][p] - sig[sp][p]);
            total += gamma_cache[key] * std::cos(arg);
        }
    }
    return total / 256.0;
}

}  // namespace detail

// One grouped cosine term: 2 (Gamma_a + Gamma_b) cos(2 sum_p coeffs_p dchi_p)
// with overall normalization 1/128.
struct FidelityTerm {
    std::array<int, 4> gamma_a{};
    std::array<int, 4> gamma_b{};
    std::array<int, 6> coeffs{};
};

// Generate the grouped closed-form term table from the same 256-pattern
// enumeration the evaluator sums. Yields exactly 28 cosine terms plus the 8
// fully-signed Gamma patterns (returned separately by full_gamma_patterns).
inline std::vector<FidelityTerm> fidelity_term_table() {
    std::array<std::array<int, 4>, 16> sgn{};
    std::array<std::array<int, 6>, 16> sig{};
    for (int s = 0; s < 16; ++s) {
        for (int i = 0; i < 4; ++i) sgn[s][i] = 1 - 2 * ((s >> i) & 1);
        for (int p = 0; p < 6; ++p)
            sig[s][p] = sgn[s][kPairSlots[p][0]] * sgn[s][kPairSlots[p][1]];
    }
    auto canon4 = [](std::array<int, 4> v) {
        for (int x : v) {
            if (x > 0) break;
            if (x < 0) {
                for (auto& e : v) e = -e;
                break;
            }
        }
        return v;
    };
    struct Group {
        std::array<int, 6> coeffs{};
        std::vector<std::array<int, 4>> patterns;
        int count = 0;
    };
    std::vector<Group> groups;
    for (int s = 0; s < 16; ++s) {
        for (int sp = 0; sp < 16; ++sp) {
            std::array<int, 4> a{};
            bool full = true, zero = true;
            for (int i = 0; i < 4; ++i) {
                a[i] = (sgn[s][i] - sgn[sp][i]) / 2;
                full &= (a[i] != 0);
                zero &= (a[i] == 0);
            }
            if (zero || full) continue;  // constant and fully-signed pieces
            std::array<int, 6> c{};
            for (int p = 0; p < 6; ++p) c[p] = (sig[s][p] - sig[sp][p]) / 2;
            // Canonicalize the coefficient vector's global sign.
            for (int x : c) {
                if (x > 0) break;
                if (x < 0) {
                    for (auto& e : c) e = -e;
                    break;
                }
            }
            a = canon4(a);
            Group* g = nullptr;
            for (auto& gr : groups)
                if (gr.coeffs == c) { g = &gr; break; }
            if (!g) {
                groups.push_back({c, {}, 0});
                g = &groups.back();
            }
            if (std::find(g->patterns.begin(), g->patterns.end(), a) ==
                g->patterns.end())
                g->patterns.push_back(a);
            g->count++;
        }
    }
    std::vector<FidelityTerm> table;
    for (auto& g : groups) {
        if (g.patterns.size() != 2 || g.count != 8)
            throw std::logic_error("unexpected fidelity term grouping");
        std::sort(g.patterns.begin(), g.patterns.end());
        table.push_back({g.patterns[0], g.patterns[1], g.coeffs});
    }
    return table;
}

inline std::vector<std::array<int, 4>> full_gamma_patterns() {
    std::vector<std::array<int, 4>> out;
    for (int b = 0; b < 8; ++b)
        out.push_back({1, 1 - 2 * ((b >> 2) & 1), 1 - 2 * ((b >> 1) & 1),
                       1 - 2 * (b & 1)});
    return out;
}

// Analytic fidelity of the M=2 parallel operation against its ideal
// (entangling targets at chi_ideals, crosstalk targets 0).
inline double parallel_fidelity(const InteractionSummary& summary,
                                const ThermalSpec& thermal) {
    for (int p : {1, 2, 3, 4})
        if (summary.chi_ideals[p] != 0.0)
            throw ConfigError("parallel mode requires zero crosstalk ideals");
    return detail::fidelity_core(summary, thermal);
}

// Fidelity against the single-operation 4-qubit GHZ unitary (all six
// entangling angles targeted at pi/4).
inline double ghz_fidelity(const InteractionSummary& summary,
                           const ThermalSpec& thermal) {
    for (int p = 0; p < 6; ++p)
        if (std::abs(summary.chi_ideals[p] - pi / 4) > 1e-12)
            throw ConfigError("GHZ mode requires all ideals = pi/4");
    return detail::fidelity_core(summary, thermal);
}

}  // namespace pargate
