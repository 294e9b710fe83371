#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actev/io.hpp"
#include "actev/presets.hpp"
#include "actev/solver.hpp"

namespace actev {

/// Initial-condition selection. `amplitude` is the requested ||D v0||_inf as
/// a fraction of the activation threshold m (the rescaling is exact because
/// the strain bound is homogeneous in the amplitude).
struct InitialSpec {
    std::string preset = "taylor_green";  // taylor_green | random_band | file
    double amplitude = 0.5;
    std::uint64_t seed = 1;
    double band_lo = 1.0, band_hi = 4.0;
    std::string file;  // snapshot prefix for preset = file
};

struct OutputSpec {
    std::string dir;
    bool csv = true;
    bool snapshots = true;
};

/// Full scenario document: law + grid + solver + initial + output.
struct ScenarioConfig {
    SolverConfig solver;
    InitialSpec initial;
    OutputSpec output;
};

namespace detail {
inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& section) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key \"" + it.key() + "\" in section " + section);
}
}  // namespace detail

inline ConstitutiveLaw law_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(
        j, {"kind", "m", "M", "a", "sigma", "nu", "m_lower", "nu_tilde", "r", "n"}, "law");
    const std::string kind = j.at("kind").get<std::string>();
    ConstitutiveLaw law;
    if (kind == "sharp_euler")
        law.kind = LawKind::SharpEuler;
    else if (kind == "regularized_euler")
        law.kind = LawKind::RegularizedEuler;
    else if (kind == "two_activation")
        law.kind = LawKind::TwoActivation;
    else if (kind == "activated_navier_stokes")
        law.kind = LawKind::ActivatedNavierStokes;
    else
        throw ConfigError("unknown law kind \"" + kind + "\"");
    law.m = j.at("m").get<double>();
    law.M = j.at("M").get<double>();
    law.a = j.at("a").get<double>();
    law.sigma = j.value("sigma", 1.0);
    law.nu = j.value("nu", 0.0);
    law.m_lower = j.value("m_lower", 0.0);
    law.nu_tilde = j.value("nu_tilde", 0.0);
    law.r = j.value("r", 0.0);
    law.n = j.value("n", 0);
    return law;
}

/// Parses and fully validates a scenario document; every constitutive and
/// solver invariant is re-checked here so a bad file never reaches the run.
inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"law", "grid", "solver", "initial", "output"}, "(root)");
    ScenarioConfig sc;

    const auto& jl = j.at("law");
    sc.solver.law = law_from_json(jl);

    const auto& jg = j.at("grid");
    detail::reject_unknown_keys(jg, {"d", "L", "N"}, "grid");
    sc.solver.grid.d = jg.at("d").get<int>();
    sc.solver.grid.L = jg.at("L").get<double>();
    sc.solver.grid.N = jg.at("N").get<int>();

    const auto& js = j.at("solver");
    detail::reject_unknown_keys(
        js, {"eps", "t_end", "dt_init", "rtol", "atol", "safety_margin", "snapshot_every"},
        "solver");
    sc.solver.eps = js.at("eps").get<double>();
    sc.solver.t_end = js.at("t_end").get<double>();
    sc.solver.dt_init = js.value("dt_init", 1e-4);
    sc.solver.rtol = js.value("rtol", 1e-8);
    sc.solver.atol = js.value("atol", 1e-12);
    sc.solver.safety_margin = js.value("safety_margin", 0.05);
    sc.solver.snapshot_every = js.value("snapshot_every", 0.0);

    // the law index doubles as the Galerkin truncation; other kinds read it
    // from the same key of the law section
    if (sc.solver.law.n < 1)
        throw ConfigError("law section must provide the truncation index n >= 1");
    sc.solver.n = sc.solver.law.n;

    if (j.contains("initial")) {
        const auto& ji = j.at("initial");
        detail::reject_unknown_keys(ji, {"preset", "amplitude", "seed", "band", "file"},
                                    "initial");
        sc.initial.preset = ji.value("preset", std::string("taylor_green"));
        sc.initial.amplitude = ji.value("amplitude", 0.5);
        sc.initial.seed = ji.value("seed", std::uint64_t{1});
        if (ji.contains("band")) {
            const auto& b = ji.at("band");
            if (!b.is_array() || b.size() != 2)
                throw ConfigError("initial.band must be [lo, hi]");
            sc.initial.band_lo = b[0].get<double>();
            sc.initial.band_hi = b[1].get<double>();
        }
        sc.initial.file = ji.value("file", std::string());
        if (sc.initial.preset != "taylor_green" && sc.initial.preset != "random_band" &&
            sc.initial.preset != "file")
            throw ConfigError("unknown initial preset \"" + sc.initial.preset + "\"");
        if (sc.initial.preset == "file" && sc.initial.file.empty())
            throw ConfigError("initial preset \"file\" requires initial.file");
        if (sc.initial.preset != "file" && !(sc.initial.amplitude > 0.0))
            throw ConfigError("initial.amplitude must be positive");
    }
    if (j.contains("output")) {
        const auto& jo = j.at("output");
        detail::reject_unknown_keys(jo, {"dir", "csv", "snapshots"}, "output");
        sc.output.dir = jo.value("dir", std::string());
        sc.output.csv = jo.value("csv", true);
        sc.output.snapshots = jo.value("snapshots", true);
    }

    sc.solver.validate();
    return sc;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    try {
        return parse_scenario(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config schema error in " + path.string() + ": " + e.what());
    }
}

/// Builds the initial velocity the scenario asks for, on the given basis.
inline SpectralVelocity build_initial(const InitialSpec& init, const SolverConfig& cfg,
                                      std::shared_ptr<const BasisIndex> basis) {
    const double target = init.amplitude * cfg.initial_strain_bound();
    if (init.preset == "taylor_green") return taylor_green(std::move(basis), target);
    if (init.preset == "random_band")
        return random_band(std::move(basis), init.seed, init.band_lo, init.band_hi, target);
    SnapshotMeta meta;
    const VectorField f = read_snapshot(init.file, &meta);
    if (f.grid != cfg.grid)
        throw ConfigError("initial.file grid does not match the configured grid");
    return from_physical(std::move(basis), f);
}

}  // namespace actev
