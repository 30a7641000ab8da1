#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "pargate/chain.hpp"
#include "pargate/common.hpp"
#include "pargate/evaluator.hpp"
#include "pargate/kernel.hpp"
#include "pargate/lbfgs.hpp"

namespace pargate {

struct Tolerances {
    double alpha = 1e-6;
    double chi = 1e-6;
};

struct GateRequest {
    std::vector<std::array<int, 2>> pairs;  // 0-based, disjoint
    std::vector<double> chi_targets;        // rad, per pair
    double tau = 0.0;                       // s
    int n_segments = 0;
    std::vector<double> mu_grid;            // rad/s; size 1 = single solve
    double power_cap = 0.0;                 // rad/s, max |Omega_s|
    Tolerances tol;
    std::vector<std::array<int, 2>> crosstalk_blacklist;  // pruned cross pairs

    std::vector<int> involved_ions() const {
        std::vector<int> ions;
        for (const auto& p : pairs) {
            ions.push_back(p[0]);
            ions.push_back(p[1]);
        }
        return ions;
    }

    // All constrained pairs: entangling pairs at their targets plus every
    // unordered crosstalk pair at 0 (minus blacklist).
    struct ConstraintPair {
        int a, b;
        double target;
        bool entangling;
    };
    std::vector<ConstraintPair> constraint_pairs() const {
        std::vector<ConstraintPair> out;
        for (size_t p = 0; p < pairs.size(); ++p)
            out.push_back({pairs[p][0], pairs[p][1], chi_targets[p], true});
        const auto ions = involved_ions();
        auto blacklisted = [&](int a, int b) {
            for (const auto& x : crosstalk_blacklist)
                if ((x[0] == a && x[1] == b) || (x[0] == b && x[1] == a))
                    return true;
            return false;
        };
        for (size_t u = 0; u < ions.size(); ++u) {
            for (size_t v = u + 1; v < ions.size(); ++v) {
                bool same_pair = false;
                for (const auto& p : pairs)
                    same_pair |= (p[0] == ions[u] && p[1] == ions[v]) ||
                                 (p[0] == ions[v] && p[1] == ions[u]);
                if (!same_pair && !blacklisted(ions[u], ions[v]))
                    out.push_back({ions[u], ions[v], 0.0, false});
            }
        }
        return out;
    }

    void validate(const ChainSpec& chain) const {
        if (pairs.empty()) throw ConfigError("request needs at least one pair");
        if (chi_targets.size() != pairs.size())
            throw ConfigError("chi_targets size does not match pairs");
        if (mu_grid.empty()) throw ConfigError("mu grid is empty");
        if (!(power_cap > 0.0)) throw ConfigError("power_cap must be positive");
        if (n_segments < 1) throw ConfigError("n_segments must be >= 1");
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        std::vector<int> ions = involved_ions();
        std::sort(ions.begin(), ions.end());
        if (std::adjacent_find(ions.begin(), ions.end()) != ions.end())
            throw ConfigError("pairs must be disjoint");
        for (int i : ions)
            if (i < 0 || i >= chain.n_ions)
                throw ConfigError("pair ion index out of range");
        for (double t : chi_targets)
            if (!std::isfinite(t)) throw ConfigError("chi target not finite");
    }
};

struct PenaltyWeights {
    double w_alpha = 1.0;
    double w_chi = 10.0;
    double w_power = 0.0;
};

// Power weight scaled so it only breaks ties between feasible solutions.
inline PenaltyWeights default_weights(const GateRequest& request) {
    PenaltyWeights w;
    w.w_power = 1e-7 * (pi / 4) * (pi / 4) /
                (request.power_cap * request.power_cap * request.n_segments);
    return w;
}

struct SolveOptions {
    int max_iterations = 5000;
    int restarts = 0;           // random-perturbation restarts beyond the base run
    int penalty_rounds = 0;     // extra x10 penalty escalations if residuals fail
    int fidelity_samples = 0;   // unused placeholder for future diagnostics
};

struct SolveResult {
    AmplitudeVector solution;
    double mu = 0.0;             // rad/s
    double residual_alpha = 0.0; // max |alpha_{i,k}|
    double residual_chi = 0.0;   // max |chi - target| over all constrained pairs
    double predicted_fidelity = 0.0;
    double objective_value = 0.0;
    double power = 0.0;          // sum of Omega_s^2 over all pairs
    int iterations = 0;
    bool converged = false;
    std::string note;            // non-empty for per-mu scan failures
};

namespace detail {

inline Eigen::VectorXd pack(const AmplitudeVector& amps) {
    int n = 0;
    for (const auto& o : amps.omegas) n += int(o.size());
    Eigen::VectorXd v(n);
    int at = 0;
    for (const auto& o : amps.omegas) {
        v.segment(at, o.size()) = o;
        at += int(o.size());
    }
    return v;
}

inline void unpack(const Eigen::VectorXd& v, AmplitudeVector& amps) {
    int at = 0;
    for (auto& o : amps.omegas) {
        o = v.segment(at, o.size());
        at += int(o.size());
    }
}

}  // namespace detail

// Penalty objective and its analytic gradient with respect to the flattened
// amplitude vector (pair 0 segments first, then pair 1, ...).
inline std::pair<double, Eigen::VectorXd> objective(const ConstraintSystem& sys,
                                                    const GateRequest& request,
                                                    const PenaltyWeights& weights,
                                                    const AmplitudeVector& amps) {
    const int S = request.n_segments;
    const int M = int(request.pairs.size());
    double value = 0.0;
    std::vector<Eigen::VectorXd> grad(M, Eigen::VectorXd::Zero(S));

    // Trajectory-closure penalties: linear alpha, gradient via C.
    for (int ion : request.involved_ions()) {
        const int p = amps.pair_of(ion);
        const Eigen::MatrixXcd& c = sys.c_mats[sys.position_of(ion)];
        const Eigen::VectorXcd a = c.transpose() * amps.omegas[p];
        value += weights.w_alpha * a.squaredNorm();
        grad[p] += 2.0 * weights.w_alpha * (c * a.conjugate()).real();
    }

    // Entangling-angle penalties: quadratic chi through the symmetric kernel.
    for (const auto& cp : request.constraint_pairs()) {
        const int pa = amps.pair_of(cp.a), pb = amps.pair_of(cp.b);
        const Eigen::MatrixXd& dsym = sys.d_sym(cp.a, cp.b);
        const double chi = amps.omegas[pa].dot(dsym * amps.omegas[pb]);
        const double dev = chi - cp.target;
        value += weights.w_chi * dev * dev;
        if (pa == pb) {
            grad[pa] += 2.0 * weights.w_chi * dev * 2.0 * (dsym * amps.omegas[pa]);
        } else {
            grad[pa] += 2.0 * weights.w_chi * dev * (dsym * amps.omegas[pb]);
            grad[pb] += 2.0 * weights.w_chi * dev * (dsym.transpose() * amps.omegas[pa]);
        }
    }

    Eigen::VectorXd flat = detail::pack(amps);
    value += weights.w_power * flat.squaredNorm();
    Eigen::VectorXd gflat(flat.size());
    int at = 0;
    for (int p = 0; p < M; ++p) {
        gflat.segment(at, S) = grad[p];
        at += S;
    }
    gflat += 2.0 * weights.w_power * flat;
    return {value, gflat};
}

// Predicted parallel fidelity of a solution (M <= 2; M = 1 pads a phantom
// zero-amplitude pair, which leaves the formula exact for the single gate).
inline InteractionSummary summarize(const ConstraintSystem& sys,
                                    const GateRequest& request,
                                    const AmplitudeVector& amps) {
    if (request.pairs.size() > 2)
        throw ConfigError("fidelity evaluation supports at most 2 pairs");
    const int n_modes = int(sys.mode_freqs.size());
    InteractionSummary s;
    s.alphas = Eigen::MatrixXcd::Zero(4, n_modes);
    std::array<int, 4> ions = {-1, -1, -1, -1};
    ions[0] = request.pairs[0][0];
    ions[1] = request.pairs[0][1];
    if (request.pairs.size() == 2) {
        ions[2] = request.pairs[1][0];
        ions[3] = request.pairs[1][1];
    }
    for (int i = 0; i < 4; ++i) {
        if (ions[i] < 0) continue;
        for (int k = 0; k < n_modes; ++k)
            s.alphas(i, k) = alpha_of(sys, amps, ions[i], k);
    }
    for (int p = 0; p < 6; ++p) {
        const int a = ions[kPairSlots[p][0]], b = ions[kPairSlots[p][1]];
        s.chis[p] = (a >= 0 && b >= 0) ? chi_of(sys, amps, a, b) : 0.0;
    }
    s.chi_ideals = {request.chi_targets[0], 0.0, 0.0, 0.0, 0.0,
                    request.pairs.size() == 2 ? request.chi_targets[1] : 0.0};
    return s;
}

namespace detail {

// The published initial guess: pair 0 all positive, pair 1 flips sign at the
// midpoint; further pairs get evenly spaced sign flips. Each pair is scaled
// so its own pattern alone would meet its chi target through the quadratic
// form.
inline AmplitudeVector initial_guess(const ConstraintSystem& sys,
                                     const GateRequest& request) {
    const int S = request.n_segments;
    AmplitudeVector amps;
    amps.pairs = request.pairs;
    for (size_t p = 0; p < request.pairs.size(); ++p) {
        Eigen::VectorXd pattern(S);
        const int blocks = int(p) + 1;
        for (int s = 0; s < S; ++s) {
            const int block = std::min(blocks - 1, int(s * blocks / S));
            pattern[s] = (block % 2 == 0) ? 1.0 : -1.0;
        }
        const auto& dsym = sys.d_sym(request.pairs[p][0], request.pairs[p][1]);
        const double quad = pattern.dot(dsym * pattern);
        double target = std::abs(request.chi_targets[p]);
        if (target == 0.0) target = pi / 4;
        const double scale = std::sqrt(target / std::max(std::abs(quad), 1e-300));
        amps.omegas.push_back(scale * pattern);
    }
    return amps;
}

inline SolveResult finish_result(const ConstraintSystem& sys,
                                 const GateRequest& request,
                                 AmplitudeVector amps, double obj_value,
                                 int iterations, bool opt_converged) {
    SolveResult r;
    r.mu = sys.mu;
    r.objective_value = obj_value;
    r.iterations = iterations;

    double res_alpha = 0.0;
    for (int ion : request.involved_ions())
        for (int k = 0; k < sys.mode_freqs.size(); ++k)
            res_alpha = std::max(res_alpha, std::abs(alpha_of(sys, amps, ion, k)));
    double res_chi = 0.0;
    for (const auto& cp : request.constraint_pairs())
        res_chi = std::max(res_chi,
                           std::abs(chi_of(sys, amps, cp.a, cp.b) - cp.target));
    double power = 0.0, max_amp = 0.0;
    for (const auto& o : amps.omegas) {
        power += o.squaredNorm();
        max_amp = std::max(max_amp, o.lpNorm<Eigen::Infinity>());
    }
    r.residual_alpha = res_alpha;
    r.residual_chi = res_chi;
    r.power = power;
    r.converged = opt_converged && res_alpha < request.tol.alpha &&
                  res_chi < request.tol.chi && max_amp <= request.power_cap;
    if (max_amp > request.power_cap) r.note = "power cap exceeded";
    r.solution = std::move(amps);  // fidelity filled by the caller
    return r;
}

}  // namespace detail

// Penalty-method solve at a single detuning (request.mu_grid[0] if called
// directly). Deterministic for fixed inputs and seed.
inline SolveResult solve(const ChainSpec& chain, const GateRequest& request,
                         const PenaltyWeights& weights, uint64_t seed,
                         const SolveOptions& options = {}) {
    request.validate(chain);
    const double mu = request.mu_grid.at(0);
    SegmentGrid grid{request.tau, request.n_segments};
    const ConstraintSystem sys = build_system(chain, request.involved_ions(), mu, grid);

    const AmplitudeVector guess = detail::initial_guess(sys, request);
    for (const auto& o : guess.omegas)
        if (o.lpNorm<Eigen::Infinity>() > request.power_cap)
            throw SolveError("power cap infeasible: initial scale exceeds cap");

    // Scale variables by the per-pair initial amplitude for conditioning.
    const int S = request.n_segments;
    const int M = int(request.pairs.size());
    Eigen::VectorXd scale(M * S);
    for (int p = 0; p < M; ++p)
        scale.segment(p * S, S).setConstant(
            std::max(guess.omegas[p].lpNorm<Eigen::Infinity>(), 1e-300));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> perturb(0.0, 0.1);

    SolveResult best;
    bool have_best = false;
    for (int attempt = 0; attempt <= options.restarts; ++attempt) {
        AmplitudeVector start = guess;
        if (attempt > 0)
            for (auto& o : start.omegas)
                for (int s = 0; s < S; ++s) o[s] *= (1.0 + perturb(rng));

        PenaltyWeights w = weights;
        for (int round = 0; ; ++round) {
            AmplitudeVector work = start;
            auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
                detail::unpack(x.cwiseProduct(scale), work);
                auto [f, gphys] = objective(sys, request, w, work);
                g = gphys.cwiseProduct(scale);
                return f;
            };
            LbfgsOptions lopt;
            lopt.max_iterations = options.max_iterations;
            const Eigen::VectorXd x0 =
                detail::pack(start).cwiseQuotient(scale);
            LbfgsResult lres = lbfgs_minimize(fg, x0, lopt);
            AmplitudeVector sol = guess;
            detail::unpack(lres.x.cwiseProduct(scale), sol);
            SolveResult r = detail::finish_result(sys, request, std::move(sol),
                                                  lres.f, lres.iterations,
                                                  lres.converged);
            const bool residuals_ok = r.residual_alpha < request.tol.alpha &&
                                      r.residual_chi < request.tol.chi;
            if (!have_best || (r.converged && !best.converged) ||
                (r.converged == best.converged &&
                 r.objective_value < best.objective_value)) {
                best = r;
                have_best = true;
            }
            if (residuals_ok || round >= options.penalty_rounds) break;
            w.w_alpha *= 10.0;
            w.w_chi *= 10.0;
        }
        if (best.converged) break;
    }

    if (request.pairs.size() <= 2) {
        const InteractionSummary s = summarize(sys, request, best.solution);
        best.predicted_fidelity =
            parallel_fidelity(s, ThermalSpec::from_nbar(chain.nbar));
    } else {
        best.predicted_fidelity = std::numeric_limits<double>::quiet_NaN();
    }
    return best;
}

// One solve per grid detuning, ranked by (converged desc, fidelity desc,
// power asc, mu asc). Degenerate detunings become unconverged entries.
inline std::vector<SolveResult> solve_scan(const ChainSpec& chain,
                                           const GateRequest& request,
                                           const PenaltyWeights& weights,
                                           uint64_t seed,
                                           const SolveOptions& options = {}) {
    request.validate(chain);
    int max_threads = 1;
    if (const char* env = std::getenv("PARGATE_THREADS")) {
        max_threads = std::max(1, std::atoi(env));
    }
    const int n = int(request.mu_grid.size());
    std::vector<SolveResult> results(n);
    auto run_one = [&](int idx) {
        GateRequest single = request;
        single.mu_grid = {request.mu_grid[idx]};
        try {
            results[idx] = solve(chain, single, weights, seed, options);
        } catch (const std::exception& e) {
            results[idx] = SolveResult{};
            results[idx].mu = request.mu_grid[idx];
            results[idx].converged = false;
            results[idx].note = e.what();
            results[idx].predicted_fidelity = 0.0;
        }
    };
    if (max_threads <= 1) {
        for (int i = 0; i < n; ++i) run_one(i);
    } else {
        std::vector<std::future<void>> futs;
        for (int i = 0; i < n; ++i) {
            if (int(futs.size()) >= max_threads) {
                futs.front().get();
                futs.erase(futs.begin());
            }
            futs.push_back(std::async(std::launch::async, run_one, i));
        }
        for (auto& f : futs) f.get();
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const SolveResult& a, const SolveResult& b) {
                         if (a.converged != b.converged) return a.converged;
                         const double fa = std::isnan(a.predicted_fidelity)
                                               ? -1.0
                                               : a.predicted_fidelity;
                         const double fb = std::isnan(b.predicted_fidelity)
                                               ? -1.0
                                               : b.predicted_fidelity;
                         if (fa != fb) return fa > fb;
                         if (a.power != b.power) return a.power < b.power;
                         return a.mu < b.mu;
                     });
    return results;
}

// Mean-square amplitude ratios of the parallel solution's two pairs to their
// stand-alone single-gate counterparts.
inline std::pair<double, double> power_ratio(const SolveResult& parallel,
                                             const SolveResult& single_a,
                                             const SolveResult& single_b) {
    if (!parallel.converged || !single_a.converged || !single_b.converged)
        throw SolveError("power_ratio requires converged inputs");
    if (parallel.solution.omegas.size() != 2)
        throw ConfigError("power_ratio expects a 2-pair parallel solution");
    auto mean_sq = [](const Eigen::VectorXd& o) {
        return o.squaredNorm() / double(o.size());
    };
    return {mean_sq(parallel.solution.omegas[0]) /
                mean_sq(single_a.solution.omegas[0]),
            mean_sq(parallel.solution.omegas[1]) /
                mean_sq(single_b.solution.omegas[0])};
}

}  // namespace pargate
