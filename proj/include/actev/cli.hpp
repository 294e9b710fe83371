#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "actev/certify.hpp"
#include "actev/config.hpp"
#include "actev/diagnostics.hpp"
#include "actev/io.hpp"

namespace actev::cli {

// Exit-code contract: 0 pass, 1 config error, 2 solver failure,
// 3 verification failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerify = 3;

namespace fs = std::filesystem;

struct RunPaths {
    fs::path dir;
    fs::path config() const { return dir / "config.json"; }
    fs::path csv() const { return dir / "diagnostics.csv"; }
    fs::path status() const { return dir / "status.json"; }
    fs::path snapshots() const { return dir / "snapshots"; }
};

inline void write_status(const RunPaths& paths, const Trajectory& traj) {
    nlohmann::json j;
    j["completed"] = traj.completed;
    j["failure"] = traj.failure;
    j["t_reached"] = traj.diagnostics.empty() ? 0.0 : traj.diagnostics.back().time;
    j["initial_energy"] = traj.initial_energy();
    j["initial_margins"] = {{"raw_strain_inf", traj.initial.raw_strain_inf},
                            {"mollified_strain_inf", traj.initial.mollified_strain_inf},
                            {"projected_strain_inf", traj.initial.projected_strain_inf},
                            {"bound", traj.initial.bound}};
    std::ofstream out(paths.status());
    out << j.dump(2) << "\n";
}

/// Executes one scenario into a self-describing run directory.
inline int cmd_run(const std::string& config_path, const std::string& out_override,
                   std::ostream& log = std::cout) {
    ScenarioConfig sc;
    try {
        sc = load_scenario(config_path);
        if (!out_override.empty()) sc.output.dir = out_override;
        if (sc.output.dir.empty())
            throw ConfigError("no output directory (set output.dir or pass --out)");
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        RunPaths paths{fs::path(sc.output.dir)};
        fs::create_directories(paths.dir);
        fs::copy_file(config_path, paths.config(), fs::copy_options::overwrite_existing);

        auto basis = build_basis(sc.solver.grid, sc.solver.n);
        SpectralVelocity v0 = build_initial(sc.initial, sc.solver, basis);

        std::optional<CsvWriter> csv;
        if (sc.output.csv) csv.emplace(paths.csv());
        IntegrateOptions opts;
        if (csv) opts.on_record = [&csv](const DiagnosticsRecord& r) { csv->row(r); };
        if (sc.output.snapshots)
            opts.on_snapshot = [&](const SolverState& st, int index) {
                write_snapshot(paths.snapshots(), index, st, sc.solver.law);
            };

        Trajectory traj = integrate(v0, sc.solver, opts);
        if (csv) csv->flush();
        write_status(paths, traj);
        if (!traj.completed) {
            log << "solver failure: " << traj.failure << "\n";
            return traj.failure.find("initial data") != std::string::npos ||
                           traj.failure.find("n too small") != std::string::npos
                       ? kExitConfig
                       : kExitSolver;
        }
        log << "run complete: " << traj.diagnostics.size() - 1 << " steps to t = "
            << traj.diagnostics.back().time << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
}

/// Replays every supported a-priori bound from the persisted files alone.
inline int cmd_verify(const std::string& run_dir, std::ostream& log = std::cout) {
    std::vector<BoundCheck> checks;
    try {
        RunPaths paths{fs::path(run_dir)};
        const ScenarioConfig sc = load_scenario(paths.config());
        const std::vector<DiagnosticsRecord> recs = read_diagnostics_csv(paths.csv());
        if (recs.empty()) throw ConfigError("diagnostics.csv has no rows");
        checks = replay_bounds(recs, sc.solver.law, sc.solver.rtol);
    } catch (const std::exception& e) {
        log << "verification input error: " << e.what() << "\n";
        return kExitConfig;
    }
    bool all_pass = true;
    char buf[256];
    if (!checks.empty() && !checks.front().note.empty()) {
        std::snprintf(buf, sizeof(buf), "[info] %s\n", checks.front().note.c_str());
        log << buf;
    }
    for (const BoundCheck& c : checks) {
        if (!c.applicable) {
            std::snprintf(buf, sizeof(buf), "[skip] %-34s (%s)\n", c.name.c_str(),
                          c.note.c_str());
            log << buf;
            continue;
        }
        const double slack = c.limit != 0.0 ? c.measured / c.limit : c.measured;
        std::snprintf(buf, sizeof(buf), "[%s] %-34s measured %.6e  limit %.6e  ratio %.3e\n",
                      c.pass ? "pass" : "FAIL", c.name.c_str(), c.measured, c.limit, slack);
        log << buf;
        all_pass = all_pass && c.pass;
    }
    return all_pass ? kExitOk : kExitVerify;
}

/// Randomized certification of the pointwise constitutive properties.
inline int cmd_props(std::uint64_t seed, long samples, const std::string& out_file,
                     std::ostream& log = std::cout) {
    const auto metrics = run_certification(seed, samples);
    const std::string report = format_certification(metrics, seed, samples);
    log << report;
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        out << report;
    }
    if (samples <= 0) return kExitOk;  // vacuous pass, warning already printed
    for (const auto& m : metrics) {
        if (m.min_monotonicity_gap < -1e-10) return kExitVerify;
        if (m.max_jacobian_fd_rel_err > 1e-6) return kExitVerify;
        if (m.max_q_identity_dev > 1e-12) return kExitVerify;
        if (m.max_gradient_bound_slack > 1e-9) return kExitVerify;
        if (m.max_capped_bound_slack > 1e-9) return kExitVerify;
        if (m.law_agreement_mismatches > 0) return kExitVerify;
    }
    return kExitOk;
}

/// Two-trajectory stability experiment driven by a scenario file.
inline int cmd_gronwall(const std::string& config_path, double perturbation_scale,
                        const std::string& out_dir, std::ostream& log = std::cout) {
    ScenarioConfig sc;
    try {
        sc = load_scenario(config_path);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        auto basis = build_basis(sc.solver.grid, sc.solver.n);
        const SpectralVelocity v0 = build_initial(sc.initial, sc.solver, basis);
        SpectralVelocity pert(basis);
        if (perturbation_scale != 0.0) {
            pert = random_band(basis, sc.initial.seed + 1, 1.0,
                               std::max(4.0, sc.initial.band_hi), 0.5);
            const double s = perturbation_scale * v0.l2_norm() / pert.l2_norm();
            for (auto& z : pert.z) z *= s;
        }
        const StabilityReport rep = gronwall_experiment(v0, pert, sc.solver);
        if (!rep.completed) {
            log << "solver failure: " << rep.failure << "\n";
            return kExitSolver;
        }
        const double slack = 1e-3;
        bool pass = true;
        for (std::size_t i = 0; i < rep.y.size(); ++i)
            if (rep.y[i] > rep.bound[i] * (1.0 + slack)) pass = false;
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream csv(fs::path(out_dir) / "gronwall.csv");
            csv << "time,y,bound,margin\n";
            for (std::size_t i = 0; i < rep.times.size(); ++i)
                csv << format_full(rep.times[i]) << ',' << format_full(rep.y[i]) << ','
                    << format_full(rep.bound[i]) << ',' << format_full(rep.margin[i]) << "\n";
            nlohmann::json j;
            j["y0"] = rep.y.empty() ? 0.0 : rep.y.front();
            j["worst_ratio"] = rep.worst_ratio;
            j["samples"] = rep.times.size();
            j["slack"] = slack;
            j["pass"] = pass;
            std::ofstream jo(fs::path(out_dir) / "gronwall_report.json");
            jo << j.dump(2) << "\n";
        }
        char buf[128];
        std::snprintf(buf, sizeof(buf), "stability: worst y/bound = %.9f over %zu samples\n",
                      rep.worst_ratio, rep.times.size());
        log << buf;
        return pass ? kExitOk : kExitVerify;
    } catch (const std::exception& e) {
        log << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
}

/// Parses "n1:eps1,n2:eps2,..." ladder specifications.
inline std::vector<std::pair<int, double>> parse_ladder(const std::string& spec) {
    std::vector<std::pair<int, double>> ladder;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("bad ladder entry \"" + item + "\" (want n:eps)");
        ladder.emplace_back(std::stoi(item.substr(0, colon)),
                            std::stod(item.substr(colon + 1)));
    }
    if (ladder.empty()) throw ConfigError("empty ladder specification");
    return ladder;
}

/// Refinement ladder with trajectory-distance report.
inline int cmd_refine(const std::string& config_path, const std::string& ladder_spec,
                      const std::string& out_dir, std::ostream& log = std::cout) {
    ScenarioConfig sc;
    std::vector<std::pair<int, double>> ladder;
    try {
        sc = load_scenario(config_path);
        ladder = parse_ladder(ladder_spec);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const SolverConfig base = sc.solver;
        const InitialSpec init = sc.initial;
        RefinementReport rep = refinement_study(
            base, ladder, [&](std::shared_ptr<const BasisIndex> basis) {
                return build_initial(init, base, std::move(basis));
            });
        char buf[160];
        for (const auto& l : rep.levels) {
            std::snprintf(buf, sizeof(buf), "level n=%d eps=%.6g %s%s\n", l.n, l.eps,
                          l.completed ? "completed" : "FAILED: ", l.failure.c_str());
            log << buf;
        }
        for (std::size_t i = 0; i < rep.consecutive_distances.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "distance level %zu -> %zu : %.9e\n", i, i + 1,
                          rep.consecutive_distances[i]);
            log << buf;
        }
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream csv(fs::path(out_dir) / "refinement.csv");
            csv << "level,n,eps,completed,max_dissipation_S,stress_L2a_integral\n";
            for (std::size_t i = 0; i < rep.levels.size(); ++i) {
                const auto& l = rep.levels[i];
                csv << i << ',' << l.n << ',' << format_full(l.eps) << ',' << l.completed << ','
                    << format_full(l.max_dissipation_S) << ','
                    << format_full(l.stress_L2a_integral) << "\n";
            }
            nlohmann::json j;
            j["distances"] = rep.consecutive_distances;
            j["distances_decreasing"] = rep.distances_decreasing;
            std::ofstream jo(fs::path(out_dir) / "refinement_report.json");
            jo << j.dump(2) << "\n";
        }
        for (const auto& l : rep.levels)
            if (!l.completed) return kExitSolver;
        return kExitOk;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}

/// Fans a ladder out as independent full runs (one directory per level).
inline int cmd_sweep(const std::string& config_path, const std::string& ladder_spec,
                     const std::string& out_dir, std::ostream& log = std::cout) {
    ScenarioConfig sc;
    std::vector<std::pair<int, double>> ladder;
    try {
        sc = load_scenario(config_path);
        ladder = parse_ladder(ladder_spec);
        if (out_dir.empty()) throw ConfigError("sweep requires --out");
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    std::vector<int> codes(ladder.size(), kExitOk);
    const unsigned workers = std::min<unsigned>(worker_threads(), ladder.size());
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= ladder.size()) return;
                idx = next++;
            }
            ScenarioConfig level = sc;
            level.solver.n = ladder[idx].first;
            level.solver.eps = ladder[idx].second;
            if (level.solver.law.kind == LawKind::RegularizedEuler)
                level.solver.law.n = ladder[idx].first;
            const fs::path dir = fs::path(out_dir) / ("level_" + std::to_string(idx));
            // materialize the per-level config, then run it like any other
            const fs::path cfg_path = dir / "level_config.json";
            fs::create_directories(dir);
            {
                nlohmann::json j;
                std::ifstream in(config_path);
                j = nlohmann::json::parse(in);
                j["law"]["n"] = ladder[idx].first;
                j["solver"]["eps"] = ladder[idx].second;
                j["output"]["dir"] = dir.string();
                std::ofstream out(cfg_path);
                out << j.dump(2) << "\n";
            }
            std::ostringstream local;
            const int code = cmd_run(cfg_path.string(), dir.string(), local);
            {
                std::lock_guard<std::mutex> lock(mu);
                log << "[level " << idx << "] " << local.str();
                codes[idx] = code;
            }
        }
    };
    std::vector<std::future<void>> futs;
    for (unsigned w = 0; w < workers; ++w) futs.push_back(std::async(std::launch::async, worker));
    for (auto& f : futs) f.get();
    for (int c : codes)
        if (c != kExitOk) return c;
    return kExitOk;
}

}  // namespace actev::cli
