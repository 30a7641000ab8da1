#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pargate/chain.hpp"
#include "pargate/common.hpp"
#include "pargate/evaluator.hpp"
#include "pargate/kernel.hpp"
#include "pargate/optimizer.hpp"
#include "pargate/simulator.hpp"

namespace pargate {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "pargate 1.0.0";

// ---------------------------------------------------------------------------
// Atomic file writes: temp file + rename, so failures never leave partials.

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.good()) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read: " + path.string());
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chain config. Frequencies in MHz in files, rad/s in memory.

inline ChainSpec load_chain(const json& cfg) {
    ChainSpec chain;
    try {
        chain.n_ions = cfg.at("n_ions").get<int>();
        if (chain.n_ions <= 0) throw ConfigError("n_ions must be positive");

        if (cfg.contains("mode_freqs_mhz")) {
            const auto freqs = cfg.at("mode_freqs_mhz").get<std::vector<double>>();
            chain.mode_freqs.resize(int(freqs.size()));
            for (size_t k = 0; k < freqs.size(); ++k)
                chain.mode_freqs[int(k)] = mhz_to_rads(freqs[k]);
            if (!cfg.contains("lamb_dicke"))
                throw ConfigError("explicit mode_freqs_mhz requires lamb_dicke");
        } else if (cfg.contains("trap")) {
            const auto& trap = cfg.at("trap");
            auto [w, eta] = compute_transverse_modes(
                chain.n_ions, mhz_to_rads(trap.at("axial_mhz").get<double>()),
                mhz_to_rads(trap.at("transverse_mhz").get<double>()),
                trap.at("mass_amu").get<double>() * amu,
                trap.at("k_eff_per_m").get<double>());
            chain.mode_freqs = w;
            chain.lamb_dicke = eta;
        } else {
            throw ConfigError("chain config needs mode_freqs_mhz or trap");
        }

        if (cfg.contains("lamb_dicke")) {
            const auto rows = cfg.at("lamb_dicke").get<std::vector<std::vector<double>>>();
            if (int(rows.size()) != chain.n_ions)
                throw ConfigError("lamb_dicke row count does not match n_ions");
            chain.lamb_dicke.resize(chain.n_ions, chain.n_ions);
            for (int i = 0; i < chain.n_ions; ++i) {
                if (int(rows[i].size()) != chain.n_ions)
                    throw ConfigError("lamb_dicke must be square n_ions x n_ions");
                for (int k = 0; k < chain.n_ions; ++k)
                    chain.lamb_dicke(i, k) = rows[i][k];
            }
        }
        if (cfg.contains("nbar")) {
            const auto nb = cfg.at("nbar").get<std::vector<double>>();
            chain.nbar.resize(int(nb.size()));
            for (size_t k = 0; k < nb.size(); ++k) chain.nbar[int(k)] = nb[k];
        } else {
            chain.nbar = Eigen::VectorXd::Constant(chain.n_ions, 0.1);
        }
        if (cfg.contains("qubit_splitting_mhz"))
            chain.qubit_splitting = mhz_to_rads(cfg.at("qubit_splitting_mhz").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("chain config: ") + e.what());
    }
    chain.validate();
    return chain;
}

inline ChainSpec load_chain_file(const std::filesystem::path& path) {
    return load_chain(read_json(path));
}

// ---------------------------------------------------------------------------
// Gate request config. Angles in units of pi, times in us, ions 1-based.

struct RequestConfig {
    GateRequest request;
    PenaltyWeights weights;
    SolveOptions options;
    bool has_weights = false;
};

inline RequestConfig load_request(const json& cfg) {
    RequestConfig rc;
    GateRequest& r = rc.request;
    try {
        for (const auto& p : cfg.at("pairs")) {
            if (!p.is_array() || p.size() != 2)
                throw ConfigError("each pair must be [i, j]");
            r.pairs.push_back({p[0].get<int>() - 1, p[1].get<int>() - 1});
        }
        for (double t : cfg.at("chi_targets").get<std::vector<double>>())
            r.chi_targets.push_back(t * pi);
        r.tau = cfg.at("tau_us").get<double>() * 1e-6;
        r.n_segments = cfg.at("n_segments").get<int>();
        if (cfg.contains("mu_mhz")) {
            r.mu_grid = {mhz_to_rads(cfg.at("mu_mhz").get<double>())};
        } else if (cfg.contains("mu_scan_mhz")) {
            const auto& scan = cfg.at("mu_scan_mhz");
            const double start = scan.at("start").get<double>();
            const double stop = scan.at("stop").get<double>();
            const int steps = scan.at("steps").get<int>();
            if (steps < 1) throw ConfigError("mu scan needs steps >= 1");
            for (int i = 0; i < steps; ++i) {
                const double f = steps == 1 ? start
                                            : start + (stop - start) * i / (steps - 1);
                r.mu_grid.push_back(mhz_to_rads(f));
            }
        } else {
            throw ConfigError("request needs mu_mhz or mu_scan_mhz");
        }
        r.power_cap = khz_to_rads(cfg.at("power_cap_rabi_khz").get<double>());
        if (cfg.contains("tolerances")) {
            const auto& tol = cfg.at("tolerances");
            if (tol.contains("alpha")) r.tol.alpha = tol.at("alpha").get<double>();
            if (tol.contains("chi")) r.tol.chi = tol.at("chi").get<double>();
        }
        if (cfg.contains("crosstalk_blacklist"))
            for (const auto& p : cfg.at("crosstalk_blacklist"))
                r.crosstalk_blacklist.push_back(
                    {p[0].get<int>() - 1, p[1].get<int>() - 1});

        rc.weights = default_weights(r);
        if (cfg.contains("weights")) {
            const auto& w = cfg.at("weights");
            if (w.contains("w_alpha")) rc.weights.w_alpha = w.at("w_alpha").get<double>();
            if (w.contains("w_chi")) rc.weights.w_chi = w.at("w_chi").get<double>();
            if (w.contains("w_power")) rc.weights.w_power = w.at("w_power").get<double>();
            rc.has_weights = true;
        }
        if (cfg.contains("max_iterations"))
            rc.options.max_iterations = cfg.at("max_iterations").get<int>();
        if (cfg.contains("restarts")) rc.options.restarts = cfg.at("restarts").get<int>();
        if (cfg.contains("penalty_rounds"))
            rc.options.penalty_rounds = cfg.at("penalty_rounds").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("request config: ") + e.what());
    }
    return rc;
}

inline RequestConfig load_request_file(const std::filesystem::path& path) {
    return load_request(read_json(path));
}

// ---------------------------------------------------------------------------
// Solution and report documents.

inline json solution_to_json(const SolveResult& result, const json& request_echo) {
    json j;
    j["mu_mhz"] = rads_to_mhz(result.mu);
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["objective_value"] = result.objective_value;
    j["residual_alpha"] = result.residual_alpha;
    j["residual_chi"] = result.residual_chi;
    j["predicted_fidelity"] = result.predicted_fidelity;
    j["power_sum_rabi_khz_sq"] =
        result.power / ((2 * pi * 1e3) * (2 * pi * 1e3));
    if (!result.note.empty()) j["note"] = result.note;
    json sol = json::array();
    for (size_t p = 0; p < result.solution.pairs.size(); ++p) {
        json entry;
        entry["pair"] = {result.solution.pairs[p][0] + 1,
                         result.solution.pairs[p][1] + 1};
        std::vector<double> amps_khz;
        for (int s = 0; s < result.solution.omegas[p].size(); ++s)
            amps_khz.push_back(rads_to_khz(result.solution.omegas[p][s]));
        entry["amplitudes_rabi_khz"] = amps_khz;
        sol.push_back(entry);
    }
    j["solution"] = sol;
    j["request"] = request_echo;
    return j;
}

// Reconstruct an AmplitudeVector (and the request echo) from a stored
// solution document.
inline AmplitudeVector solution_from_json(const json& j) {
    AmplitudeVector amps;
    try {
        for (const auto& entry : j.at("solution")) {
            amps.pairs.push_back({entry.at("pair")[0].get<int>() - 1,
                                  entry.at("pair")[1].get<int>() - 1});
            const auto vals = entry.at("amplitudes_rabi_khz").get<std::vector<double>>();
            Eigen::VectorXd o(int(vals.size()));
            for (size_t s = 0; s < vals.size(); ++s) o[int(s)] = khz_to_rads(vals[s]);
            amps.omegas.push_back(o);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("solution document: ") + e.what());
    }
    return amps;
}

inline json evaluator_report(const ChainSpec& chain, const ConstraintSystem& sys,
                             const GateRequest& request,
                             const AmplitudeVector& amps, bool include_ghz) {
    const InteractionSummary summary = summarize(sys, request, amps);
    const ThermalSpec thermal = ThermalSpec::from_nbar(chain.nbar);
    json j;
    j["mu_mhz"] = rads_to_mhz(sys.mu);
    j["F_parallel"] = parallel_fidelity(summary, thermal);
    if (include_ghz && request.pairs.size() == 2) {
        InteractionSummary ghz = summary;
        ghz.chi_ideals = {pi / 4, pi / 4, pi / 4, pi / 4, pi / 4, pi / 4};
        j["F_ghz"] = ghz_fidelity(ghz, thermal);
    }
    json alpha_abs = json::array();
    for (int i = 0; i < 4; ++i) {
        if (i >= 2 && request.pairs.size() < 2) break;
        json row = json::array();
        for (int k = 0; k < summary.alphas.cols(); ++k)
            row.push_back(std::abs(summary.alphas(i, k)));
        alpha_abs.push_back(row);
    }
    j["alpha_abs"] = alpha_abs;
    json chis;
    static const char* slot_names[6] = {"ij", "im", "in", "jm", "jn", "mn"};
    for (int p = 0; p < 6; ++p) {
        chis[slot_names[p]] = {{"chi_pi", summary.chis[p] / pi},
                               {"ideal_pi", summary.chi_ideals[p] / pi}};
    }
    j["chi"] = chis;
    json gammas;
    for (const auto& pat : full_gamma_patterns()) {
        std::string name;
        for (int v : pat) name += (v > 0 ? '+' : '-');
        gammas[name] = gamma_factor(summary, thermal, pat);
    }
    j["gamma_full_patterns"] = gammas;
    return j;
}

// ---------------------------------------------------------------------------
// CSV exports.

inline std::string trajectory_csv(const ConstraintSystem& sys,
                                  const AmplitudeVector& amps, int ion,
                                  int mode, int n_samples) {
    const auto path = trajectory(sys, amps, ion, mode, n_samples);
    std::string out = "t_us,re_alpha,im_alpha,ion,mode\n";
    for (int m = 0; m < n_samples; ++m) {
        const double t_us = sys.grid.tau * 1e6 * m / (n_samples - 1);
        out += detail::fmt("%.6f", t_us) + "," +
               detail::fmt("%.12e", path[m].real()) + "," +
               detail::fmt("%.12e", path[m].imag()) + "," +
               std::to_string(ion + 1) + "," + std::to_string(mode + 1) + "\n";
    }
    return out;
}

inline std::string bitstring(int value, int n_bits) {
    std::string s(n_bits, '0');
    for (int b = 0; b < n_bits; ++b)
        if (value & (1 << (n_bits - 1 - b))) s[b] = '1';
    return s;
}

inline std::string truth_table_csv(const TruthTable& table) {
    const int dim = int(table.probs.cols());
    std::string out = "input";
    for (int j = 0; j < dim; ++j) out += "," + bitstring(j, table.n_qubits);
    out += "\n";
    for (size_t r = 0; r < table.inputs.size(); ++r) {
        out += bitstring(table.inputs[r], table.n_qubits);
        for (int j = 0; j < dim; ++j)
            out += "," + detail::fmt("%.12f", table.probs(int(r), j));
        out += "\n";
    }
    return out;
}

inline std::string parity_csv(const ParityScan& scan) {
    std::string out = "phi,parity\n";
    for (size_t m = 0; m < scan.phases.size(); ++m)
        out += detail::fmt("%.12f", scan.phases[m]) + "," +
               detail::fmt("%.12f", scan.parities[m]) + "\n";
    return out;
}

inline json parity_fit_json(const ParityScan& scan, double chi) {
    json j;
    j["chi_pi"] = chi / pi;
    j["fit"] = {{"offset", scan.fit_offset},
                {"amplitude", scan.fit_amplitude},
                {"phase", scan.fit_phase},
                {"max_residual", scan.fit_residual}};
    j["ideal_amplitude"] = std::abs(2 * std::cos(chi) * std::sin(chi));
    const double f = fidelity_from_parity(std::cos(chi) * std::cos(chi),
                                          std::sin(chi) * std::sin(chi),
                                          scan.fit_amplitude, chi);
    j["fidelity_ideal_populations"] = f;
    return j;
}

inline json state_to_json(const StateVector& state) {
    json j;
    j["n_qubits"] = state.n_qubits;
    json amps = json::array();
    for (int i = 0; i < state.amps.size(); ++i)
        amps.push_back({{"basis", bitstring(i, state.n_qubits)},
                        {"re", state.amps[i].real()},
                        {"im", state.amps[i].imag()}});
    j["amplitudes"] = amps;
    return j;
}

// ---------------------------------------------------------------------------
// Run manifest.

struct RunManifest {
    std::string command;
    json config_snapshot;
    uint64_t seed = 0;
    std::vector<std::string> outputs;
    double duration_s = 0.0;

    json to_json() const {
        json j;
        j["command"] = command;
        j["tool_version"] = kToolVersion;
        j["seed"] = seed;
        j["config"] = config_snapshot;
        j["outputs"] = outputs;
        j["duration_s"] = duration_s;
        return j;
    }
};

}  // namespace pargate
