#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actev/errors.hpp"
#include "actev/solver.hpp"

namespace actev {

inline constexpr const char* kCsvHeader =
    "time,kinetic_energy,dissipation_S,dissipation_eps,Dv_max,stress_L1,stress_L2a,"
    "activation_fraction";

inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Streams one CSV row per accepted step, full decimal precision.
class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw ConfigError("cannot open CSV for writing: " + path.string());
        out_ << kCsvHeader << "\n";
    }
    void row(const DiagnosticsRecord& r) {
        out_ << format_full(r.time) << ',' << format_full(r.kinetic_energy) << ','
             << format_full(r.dissipation_S) << ',' << format_full(r.dissipation_eps) << ','
             << format_full(r.Dv_max) << ',' << format_full(r.stress_L1) << ','
             << format_full(r.stress_L2a) << ',' << format_full(r.activation_fraction) << "\n";
    }
    void flush() { out_.flush(); }

  private:
    std::ofstream out_;
};

/// Parses a diagnostics CSV back into records (cumulative integrals are
/// derived quantities and recomputed by consumers).
inline std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV: " + path.string());
    if (line != kCsvHeader)
        throw ConfigError("unexpected CSV header in " + path.string());
    std::vector<DiagnosticsRecord> recs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double vals[8];
        for (int i = 0; i < 8; ++i) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("short CSV row: " + line);
            vals[i] = std::stod(cell);
        }
        DiagnosticsRecord r;
        r.time = vals[0];
        r.kinetic_energy = vals[1];
        r.dissipation_S = vals[2];
        r.dissipation_eps = vals[3];
        r.Dv_max = vals[4];
        r.stress_L1 = vals[5];
        r.stress_L2a = vals[6];
        r.activation_fraction = vals[7];
        recs.push_back(r);
    }
    return recs;
}

inline nlohmann::json law_to_json(const ConstitutiveLaw& law) {
    nlohmann::json j;
    switch (law.kind) {
        case LawKind::SharpEuler: j["kind"] = "sharp_euler"; break;
        case LawKind::RegularizedEuler: j["kind"] = "regularized_euler"; break;
        case LawKind::TwoActivation: j["kind"] = "two_activation"; break;
        case LawKind::ActivatedNavierStokes: j["kind"] = "activated_navier_stokes"; break;
    }
    j["m"] = law.m;
    j["M"] = law.M;
    j["a"] = law.a;
    j["sigma"] = law.sigma;
    if (law.kind == LawKind::RegularizedEuler) j["n"] = law.n;
    if (law.kind == LawKind::TwoActivation) {
        j["nu"] = law.nu;
        j["m_lower"] = law.m_lower;
    }
    if (law.kind == LawKind::ActivatedNavierStokes) {
        j["nu"] = law.nu;
        j["nu_tilde"] = law.nu_tilde;
        j["r"] = law.r;
    }
    return j;
}

/// Raw little-endian float64 grid dump, row-major, one file per velocity
/// component, each with a JSON sidecar describing the sample.
inline void write_snapshot(const std::filesystem::path& dir, int index, const SolverState& st,
                           const ConstitutiveLaw& law) {
    std::filesystem::create_directories(dir);
    const Grid& g = st.vphys.grid;
    char name[64];
    for (int c = 0; c < g.d; ++c) {
        std::snprintf(name, sizeof(name), "snap_%06d_c%d", index, c);
        const std::filesystem::path base = dir / name;
        {
            std::ofstream out(base.string() + ".f64", std::ios::binary);
            if (!out) throw ConfigError("cannot write snapshot " + base.string());
            static_assert(sizeof(double) == 8);
            out.write(reinterpret_cast<const char*>(st.vphys.comp[c].data()),
                      static_cast<std::streamsize>(g.size() * sizeof(double)));
        }
        nlohmann::json meta;
        meta["d"] = g.d;
        meta["L"] = g.L;
        meta["N"] = g.N;
        meta["time"] = st.time;
        meta["component"] = c;
        meta["law"] = law_to_json(law);
        std::ofstream jout(base.string() + ".json");
        jout << meta.dump(2) << "\n";
    }
}

struct SnapshotMeta {
    int d = 0;
    double L = 0.0;
    int N = 0;
    double time = 0.0;
};

/// Loads the velocity components written by write_snapshot; `prefix` is the
/// path up to (and excluding) the "_c<i>" suffix.
inline VectorField read_snapshot(const std::string& prefix, SnapshotMeta* meta_out = nullptr) {
    SnapshotMeta meta;
    {
        std::ifstream jin(prefix + "_c0.json");
        if (!jin) throw ConfigError("cannot open snapshot sidecar " + prefix + "_c0.json");
        nlohmann::json j = nlohmann::json::parse(jin);
        meta.d = j.at("d").get<int>();
        meta.L = j.at("L").get<double>();
        meta.N = j.at("N").get<int>();
        meta.time = j.at("time").get<double>();
    }
    Grid g(meta.d, meta.L, meta.N);
    VectorField f(g);
    for (int c = 0; c < g.d; ++c) {
        const std::string path = prefix + "_c" + std::to_string(c) + ".f64";
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open snapshot component " + path);
        in.read(reinterpret_cast<char*>(f.comp[c].data()),
                static_cast<std::streamsize>(g.size() * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != g.size() * sizeof(double))
            throw ConfigError("snapshot component truncated: " + path);
    }
    if (meta_out) *meta_out = meta;
    return f;
}

}  // namespace actev
