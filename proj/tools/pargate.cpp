// Command-line pipeline: solve pulse requests, re-evaluate stored solutions,
// and run spin-space circuit simulations, writing all artifacts as files.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pargate/io.hpp"

namespace fs = std::filesystem;
using namespace pargate;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    }
};

json request_echo(const json& request_cfg, double mu_rads, uint64_t seed) {
    json echo = request_cfg;
    echo["resolved_mu_mhz"] = rads_to_mhz(mu_rads);
    echo["seed"] = seed;
    return echo;
}

int cmd_solve(const std::string& chain_file, const std::string& request_file,
              const std::string& out_dir, uint64_t seed,
              const std::string& mu_scan, bool verbose) {
    Timer timer;
    const json chain_cfg = read_json(chain_file);
    const json request_cfg = read_json(request_file);
    const ChainSpec chain = load_chain(chain_cfg);
    RequestConfig rc = load_request(request_cfg);

    if (!mu_scan.empty()) {
        double start = 0, stop = 0;
        int steps = 0;
        if (std::sscanf(mu_scan.c_str(), "%lf,%lf,%d", &start, &stop, &steps) != 3 ||
            steps < 1)
            throw ConfigError("--mu-scan expects start_mhz,stop_mhz,steps");
        rc.request.mu_grid.clear();
        for (int i = 0; i < steps; ++i)
            rc.request.mu_grid.push_back(mhz_to_rads(
                steps == 1 ? start : start + (stop - start) * i / (steps - 1)));
    }
    rc.request.validate(chain);

    RunManifest manifest;
    manifest.command = "solve";
    manifest.seed = seed;
    manifest.config_snapshot = {{"chain", chain_cfg}, {"request", request_cfg}};

    SolveResult best;
    if (rc.request.mu_grid.size() == 1) {
        best = solve(chain, rc.request, rc.weights, seed, rc.options);
    } else {
        const auto results = solve_scan(chain, rc.request, rc.weights, seed, rc.options);
        best = results.front();
        json scan = json::array();
        for (const auto& r : results) {
            scan.push_back({{"mu_mhz", rads_to_mhz(r.mu)},
                            {"converged", r.converged},
                            {"predicted_fidelity", r.predicted_fidelity},
                            {"residual_alpha", r.residual_alpha},
                            {"residual_chi", r.residual_chi},
                            {"power_sum_rabi_khz_sq",
                             r.power / ((2 * pi * 1e3) * (2 * pi * 1e3))},
                            {"note", r.note}});
        }
        const fs::path scan_path = fs::path(out_dir) / "scan.json";
        write_json_atomic(scan_path, scan);
        manifest.outputs.push_back(scan_path.string());
    }
    if (verbose)
        std::fprintf(stderr, "best mu=%.6f MHz converged=%d F=%.9f\n",
                     rads_to_mhz(best.mu), int(best.converged),
                     best.predicted_fidelity);

    const fs::path sol_path = fs::path(out_dir) / "solution.json";
    write_json_atomic(sol_path,
                      solution_to_json(best, request_echo(request_cfg, best.mu, seed)));
    manifest.outputs.push_back(sol_path.string());

    GateRequest single = rc.request;
    single.mu_grid = {best.mu};
    SegmentGrid grid{single.tau, single.n_segments};
    const ConstraintSystem sys =
        build_system(chain, single.involved_ions(), best.mu, grid);

    for (int ion : single.involved_ions()) {
        for (int k = 0; k < chain.n_ions; ++k) {
            const fs::path traj_path =
                fs::path(out_dir) / ("trajectory_ion" + std::to_string(ion + 1) +
                                     "_mode" + std::to_string(k + 1) + ".csv");
            write_file_atomic(traj_path,
                              trajectory_csv(sys, best.solution, ion, k, 201));
            manifest.outputs.push_back(traj_path.string());
        }
    }

    const fs::path report_path = fs::path(out_dir) / "report.json";
    write_json_atomic(report_path,
                      evaluator_report(chain, sys, single, best.solution, false));
    manifest.outputs.push_back(report_path.string());

    manifest.duration_s = timer.elapsed_s();
    write_json_atomic(fs::path(out_dir) / "manifest.json", manifest.to_json());

    if (!best.converged) throw SolveError("solver did not converge: " + best.note);
    return 0;
}

int cmd_evaluate(const std::string& solution_file, const std::string& chain_file,
                 const std::string& out_file, bool ghz) {
    Timer timer;
    const json chain_cfg = read_json(chain_file);
    const json sol_doc = read_json(solution_file);
    const ChainSpec chain = load_chain(chain_cfg);
    const AmplitudeVector amps = solution_from_json(sol_doc);
    if (!sol_doc.contains("request"))
        throw ConfigError("solution document lacks a request echo");
    RequestConfig rc = load_request(sol_doc.at("request"));
    const double mu = mhz_to_rads(sol_doc.at("mu_mhz").get<double>());

    for (size_t p = 0; p < amps.pairs.size(); ++p) {
        if (amps.pairs[p] != rc.request.pairs[p])
            throw ConfigError("solution pairs do not match request echo");
        if (amps.omegas[p].size() != rc.request.n_segments)
            throw ConfigError("solution segment count does not match request");
    }
    for (const auto& pr : amps.pairs)
        for (int ion : pr)
            if (ion < 0 || ion >= chain.n_ions)
                throw ConfigError("solution ion index outside chain");

    SegmentGrid grid{rc.request.tau, rc.request.n_segments};
    const ConstraintSystem sys =
        build_system(chain, rc.request.involved_ions(), mu, grid);
    GateRequest single = rc.request;
    single.mu_grid = {mu};

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config_snapshot = {{"chain", chain_cfg}, {"solution", solution_file}};
    write_json_atomic(out_file, evaluator_report(chain, sys, single, amps, ghz));
    manifest.outputs.push_back(out_file);
    manifest.duration_s = timer.elapsed_s();
    write_json_atomic(fs::path(out_file).string() + ".manifest.json",
                      manifest.to_json());
    return 0;
}

Circuit circuit_from_json(const json& doc) {
    Circuit c;
    try {
        c.n_qubits = doc.at("n_qubits").get<int>();
        for (const auto& g : doc.at("gates")) {
            const std::string kind = g.at("gate").get<std::string>();
            if (kind == "XX") {
                c.gates.push_back(Gate::xx(g.at("qubits")[0].get<int>(),
                                           g.at("qubits")[1].get<int>(),
                                           g.at("chi_pi").get<double>() * pi));
            } else if (kind == "R") {
                c.gates.push_back(Gate::r(g.at("qubit").get<int>(),
                                          g.at("theta_pi").get<double>() * pi,
                                          g.at("phi_pi").get<double>() * pi));
            } else if (kind == "Rz") {
                c.gates.push_back(Gate::rz(g.at("qubit").get<int>(),
                                           g.at("theta_pi").get<double>() * pi));
            } else {
                throw ConfigError("unknown gate kind: " + kind);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("circuit document: ") + e.what());
    }
    return c;
}

int cmd_simulate(const std::string& circuit_file, const std::string& builtin,
                 const std::string& out_dir, double chi_pi, int points) {
    Timer timer;
    RunManifest manifest;
    manifest.command = "simulate";

    auto emit_table = [&](const std::string& name, const TruthTable& table) {
        const fs::path p = fs::path(out_dir) / (name + ".csv");
        write_file_atomic(p, truth_table_csv(table));
        manifest.outputs.push_back(p.string());
    };

    if (!circuit_file.empty()) {
        const json doc = read_json(circuit_file);
        const Circuit c = circuit_from_json(doc);
        manifest.config_snapshot = doc;
        if (c.n_qubits > 12) throw ConfigError("custom circuits limited to 12 qubits");
        StateVector state = StateVector::zero(c.n_qubits);
        apply(state, c);
        const fs::path p = fs::path(out_dir) / "state.json";
        write_json_atomic(p, state_to_json(state));
        manifest.outputs.push_back(p.string());
        std::vector<int> inputs(std::size_t(1) << c.n_qubits);
        for (size_t i = 0; i < inputs.size(); ++i) inputs[i] = int(i);
        emit_table("truth_table", run_circuit_table(c, inputs));
    } else if (builtin == "parallel-cnots") {
        emit_table("parallel_cnots", run_parallel_cnots());
    } else if (builtin == "adder-feynman") {
        emit_table("adder_feynman", run_adder(AdderVariant::Feynman));
    } else if (builtin == "adder-optimized") {
        emit_table("adder_optimized", run_adder(AdderVariant::Optimized));
    } else if (builtin == "ghz") {
        const StateVector state = run_ghz();
        const fs::path p = fs::path(out_dir) / "ghz_state.json";
        write_json_atomic(p, state_to_json(state));
        manifest.outputs.push_back(p.string());
    } else if (builtin == "parity") {
        const double chi = chi_pi * pi;
        const ParityScan scan = parity_scan(chi, points);
        const fs::path pcsv = fs::path(out_dir) / "parity.csv";
        write_file_atomic(pcsv, parity_csv(scan));
        manifest.outputs.push_back(pcsv.string());
        const fs::path pfit = fs::path(out_dir) / "parity_fit.json";
        write_json_atomic(pfit, parity_fit_json(scan, chi));
        manifest.outputs.push_back(pfit.string());
    } else {
        throw ConfigError("unknown builtin: " + builtin);
    }
    manifest.config_snapshot["builtin"] = builtin;
    manifest.config_snapshot["chi_pi"] = chi_pi;
    manifest.duration_s = timer.elapsed_s();
    write_json_atomic(fs::path(out_dir) / "manifest.json", manifest.to_json());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmented-pulse design and verification for parallel XX gates"};
    app.require_subcommand(1);

    std::string chain_file, request_file, solution_file, circuit_file, builtin;
    std::string out_dir = ".", out_file = "report.json", mu_scan;
    uint64_t seed = 0;
    bool verbose = false, ghz = false;
    double chi_pi = 0.25;
    int points = 24;

    auto* s_solve = app.add_subcommand("solve", "Design a pulse solution");
    s_solve->add_option("--chain", chain_file)->required();
    s_solve->add_option("--request", request_file)->required();
    s_solve->add_option("--out", out_dir);
    s_solve->add_option("--seed", seed);
    s_solve->add_option("--mu-scan", mu_scan, "start_mhz,stop_mhz,steps override");
    s_solve->add_flag("--verbose", verbose);

    auto* s_eval = app.add_subcommand("evaluate", "Re-evaluate a stored solution");
    s_eval->add_option("--solution", solution_file)->required();
    s_eval->add_option("--chain", chain_file)->required();
    s_eval->add_option("--out", out_file);
    s_eval->add_flag("--ghz", ghz, "also report the GHZ-mode fidelity");

    auto* s_sim = app.add_subcommand("simulate", "Run a spin-space circuit");
    s_sim->add_option("--circuit", circuit_file);
    s_sim->add_option("--builtin", builtin,
                      "parallel-cnots | adder-feynman | adder-optimized | ghz | parity");
    s_sim->add_option("--out", out_dir);
    s_sim->add_option("--chi-pi", chi_pi, "parity builtin: chi in units of pi");
    s_sim->add_option("--points", points, "parity builtin: scan points");

    try {
        app.parse(argc, argv);
        if (s_solve->parsed())
            return cmd_solve(chain_file, request_file, out_dir, seed, mu_scan, verbose);
        if (s_eval->parsed())
            return cmd_evaluate(solution_file, chain_file, out_file, ghz);
        if (s_sim->parsed()) {
            if (circuit_file.empty() == builtin.empty())
                throw ConfigError("simulate needs exactly one of --circuit/--builtin");
            return cmd_simulate(circuit_file, builtin, out_dir, chi_pi, points);
        }
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SolveError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
