#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "actev/constitutive.hpp"
#include "actev/errors.hpp"
#include "actev/rk45.hpp"
#include "actev/velocity.hpp"

namespace actev {

struct SolverConfig {
    ConstitutiveLaw law;
    double eps = 1e-3;        // weight of the regularizing (1 + |Dv|^2) Dv term
    int n = 0;                // Galerkin truncation (number of eigenmodes)
    Grid grid;
    double t_end = 1.0;
    double dt_init = 1e-4;
    double rtol = 1e-8;
    double atol = 1e-12;
    double safety_margin = 0.05;   // fraction of (M - m) kept clear of the strain cap
    double snapshot_every = 0.0;   // time between state snapshots; <= 0 keeps ends only
    std::vector<double> soft_omegas = {1e-1, 1e-2, 1e-3};

    void validate() const {
        law.validate();
        grid.validate();
        if (!(eps >= 0.0)) throw ConfigError("solver: eps must be >= 0");
        if (n < 1) throw ConfigError("solver: n must be positive");
        if (n > basis_capacity(grid))
            throw ConfigError("solver: n exceeds grid capacity " +
                              std::to_string(basis_capacity(grid)));
        if (!(t_end > 0.0)) throw ConfigError("solver: t_end must be positive");
        if (!(dt_init > 0.0)) throw ConfigError("solver: dt_init must be positive");
        if (!(rtol > 0.0 && atol > 0.0)) throw ConfigError("solver: rtol, atol must be positive");
        if (!(safety_margin >= 0.0 && safety_margin < 1.0))
            throw ConfigError("solver: safety_margin must lie in [0, 1)");
    }

    /// Strain bound the initial data must satisfy (sub-activation start).
    double initial_strain_bound() const {
        return law.kind == LawKind::TwoActivation ? law.m_lower : law.m;
    }
};

/// One time sample of every tracked integral.
struct DiagnosticsRecord {
    double time = 0.0;
    double kinetic_energy = 0.0;      // 1/2 ||v||_2^2
    double dissipation_S = 0.0;       // (S_n(Dv), Dv)
    double dissipation_eps = 0.0;     // eps ((1 + |Dv|^2) Dv, Dv)
    double Dv_max = 0.0;              // ||Dv||_inf on the evaluation grid
    double stress_L1 = 0.0;           // ||S_n||_1 (spatial)
    double stress_L2a = 0.0;          // ||S_n||_{2(1-a)} (spatial)
    double activation_fraction = 0.0; // |{|Dv| >= M - 1/n}| / L^d
    std::vector<double> soft_activation;  // per configured omega
    double cum_dissipation_S = 0.0;   // time integrals carried by the integrator
    double cum_dissipation_eps = 0.0;
};

struct SolverState {
    double time = 0.0;
    SpectralVelocity v;
    VectorField vphys;     // cached physical velocity (native grid)
    SymTensorField Dv;     // cached strain field (dealiased evaluation grid)

    SolverState() : vphys(Grid()), Dv(Grid()) {}
};

/// Margins measured while preparing the initial state.
struct InitialReport {
    double raw_strain_inf = 0.0;        // ||D v0||_inf
    double mollified_strain_inf = 0.0;  // ||D v0_eps||_inf
    double projected_strain_inf = 0.0;  // ||P^n D v0_eps||_inf
    double bound = 0.0;                 // the activation threshold they must clear
};

struct Trajectory {
    SolverConfig config;
    InitialReport initial;
    std::vector<SolverState> states;             // snapshot cadence
    std::vector<DiagnosticsRecord> diagnostics;  // every accepted step
    std::vector<std::pair<double, std::vector<cplx>>> coeff_history;  // optional
    std::vector<double> accepted_dt;             // step sizes, one per accepted step
    bool completed = false;
    std::string failure;

    double initial_energy() const {
        return diagnostics.empty() ? 0.0 : diagnostics.front().kinetic_energy;
    }
};

struct IntegrateOptions {
    bool store_coefficients = false;
    std::function<void(const DiagnosticsRecord&)> on_record;
    std::function<void(const SolverState&, int snapshot_index)> on_snapshot;
};

/// Pseudo-spectral evaluation of the Galerkin right-hand side
///   dz/dt = P^n [ -div(v x v) + div(S_n(Dv) + eps (1 + |Dv|^2) Dv) ]
/// with the convective term in divergence form. Quadratic products are
/// evaluated on a 3/2-padded grid and the stress/cubic terms on a 2x-padded
/// grid, so every retained spectral pairing is alias-free.
class GalerkinRhs {
  public:
    GalerkinRhs(const SolverConfig& cfg, std::shared_ptr<const BasisIndex> basis)
        : cfg_(cfg),
          eval_(cfg.law),
          basis_(std::move(basis)),
          gN_(cfg.grid),
          gQ_(dealias_grid(cfg.grid, 2)),
          gC_(dealias_grid(cfg.grid, 3)),
          uhat_(gN_) {
        const int d = gN_.d;
        tcomp_ = d * (d + 1) / 2;
        nind_ = tcomp_ - 1;  // trace-free: last diagonal plane is dependent
        for (int i = 0; i < d; ++i) vq_[i].assign(gQ_.size(), 0.0);
        for (int c = 0; c < tcomp_; ++c) conv_spec_[c].assign(gN_.size(), cplx(0, 0));
        for (int c = 0; c < nind_; ++c) {
            strain_[c].assign(gC_.size(), 0.0);
            that_spec_[c].assign(gN_.size(), cplx(0, 0));
        }
    }

    const Grid& eval_grid() const { return gC_; }
    std::shared_ptr<const BasisIndex> basis() const { return basis_; }

    /// |Dv|_inf of the state seen by the most recent evaluation or scan.
    double last_max_strain() const { return last_max_strain_; }

    /// State dimension: realified coefficients plus the two dissipation
    /// integrals, which ride along as quadrature variables so the energy
    /// budget closes at integrator accuracy on every trajectory.
    std::size_t state_dim() const { return 2 * basis_->modes.size() + 2; }

    void operator()(double /*t*/, const std::vector<double>& y, std::vector<double>& dy) {
        scatter_state(y);
        convective_spectra();
        strain_planes();
        const bool stress_active = pointwise_total_stress();
        if (stress_active) {
            for (int c = 0; c < nind_; ++c) {
                physical_to_spectrum(gC_, strain_[c], workc_, workc2_);
                respread_spectrum(gC_, workc_, gN_, that_spec_[c]);
            }
        } else {
            for (int c = 0; c < nind_; ++c)
                std::fill(that_spec_[c].begin(), that_spec_[c].end(), cplx(0, 0));
        }
        gather_rhs(dy);
        dy.resize(state_dim());
        dy[state_dim() - 2] = last_diss_S_;
        dy[state_dim() - 1] = last_diss_eps_;
    }

    /// Diagnostics sums at a state; does not disturb the FSAL stages.
    DiagnosticsRecord scan(double t, const std::vector<double>& y) {
        scatter_state(y);
        strain_planes();
        DiagnosticsRecord rec;
        rec.time = t;
        double e = 0.0;
        for (std::size_t j = 0; j < basis_->modes.size(); ++j)
            e += y[2 * j] * y[2 * j] + y[2 * j + 1] * y[2 * j + 1];
        rec.kinetic_energy = 0.5 * e;

        const double hc = gC_.cell_volume();
        const double act_thr = cfg_.law.kind == LawKind::RegularizedEuler
                                   ? cfg_.law.frozen_strain()
                                   : cfg_.law.M;
        const double flat = eval_.flat;
        const double twoam = 2.0 * (1.0 - cfg_.law.a);
        double diss_s = 0.0, diss_e = 0.0, l1 = 0.0, l2a = 0.0, smax = 0.0;
        std::size_t act_count = 0;
        std::vector<double> soft(cfg_.soft_omegas.size(), 0.0);
        const std::size_t npts = gC_.size();
        for (std::size_t p = 0; p < npts; ++p) {
            const double s = strain_magnitude(p);
            if (!(s <= smax)) smax = s;
            if (s > flat) {
                const double f = eval_.magnitude(s);
                diss_s += f * s;
                l1 += f;
                l2a += std::pow(f, twoam);
            }
            if (cfg_.eps > 0.0) diss_e += (1.0 + s * s) * s * s;
            if (s >= act_thr) {
                ++act_count;
                const double over = s - act_thr;
                for (std::size_t w = 0; w < soft.size(); ++w)
                    soft[w] += over / (over + cfg_.soft_omegas[w]);
            }
        }
        last_max_strain_ = smax;
        rec.Dv_max = smax;
        rec.dissipation_S = diss_s * hc;
        rec.dissipation_eps = cfg_.eps * diss_e * hc;
        rec.stress_L1 = l1 * hc;
        rec.stress_L2a = std::pow(l2a * hc, 1.0 / twoam);
        rec.activation_fraction = static_cast<double>(act_count) / static_cast<double>(npts);
        rec.soft_activation.resize(soft.size());
        for (std::size_t w = 0; w < soft.size(); ++w) rec.soft_activation[w] = soft[w] * hc;
        return rec;
    }

    /// Rebuilds the cached physical fields of a state from its coefficients.
    void refresh_cache(SolverState& st) const {
        st.vphys = to_physical(st.v);
        st.Dv = sym_gradient_on(st.v, gC_);
    }

  private:
    void scatter_state(const std::vector<double>& y) {
        const Grid& g = gN_;
        for (int i = 0; i < g.d; ++i)
            std::fill(uhat_.comp[i].begin(), uhat_.comp[i].end(), cplx(0, 0));
        const double amp = 1.0 / std::sqrt(2.0 * g.volume());
        const auto& modes = basis_->modes;
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const Mode& m = modes[j];
            const cplx zj(y[2 * j], y[2 * j + 1]);
            std::array<int, 3> pi{0, 0, 0}, ni{0, 0, 0};
            for (int ax = 0; ax < g.d; ++ax) {
                pi[ax] = wave_to_index(m.k[ax], g.N);
                ni[ax] = wave_to_index(-m.k[ax], g.N);
            }
            const std::size_t fp = flat_index(g, pi), fn = flat_index(g, ni);
            const cplx c = zj * amp;
            for (int i = 0; i < g.d; ++i) {
                uhat_.comp[i][fp] += c * m.e[i];
                uhat_.comp[i][fn] += std::conj(c) * m.e[i];
            }
        }
    }

    void convective_spectra() {
        const int d = gN_.d;
        for (int i = 0; i < d; ++i) {
            respread_spectrum(gN_, uhat_.comp[i], gQ_, workq_);
            spectrum_to_physical(gQ_, workq_, vq_[i], workq2_);
        }
        int c = 0;
        std::vector<double>& prod = prodq_;
        prod.resize(gQ_.size());
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j, ++c) {
                for (std::size_t p = 0; p < gQ_.size(); ++p) prod[p] = vq_[i][p] * vq_[j][p];
                physical_to_spectrum(gQ_, prod, workq_, workq2_);
                respread_spectrum(gQ_, workq_, gN_, conv_spec_[c]);
            }
    }

    /// Independent strain planes on the cubic-dealiased grid.
    /// d = 2: [D00, D01]; d = 3: [D00, D11, D01, D02, D12].
    void strain_planes() {
        const int d = gN_.d;
        int c = 0;
        auto emit = [&](int i, int j) {
            detail::sym_gradient_component(uhat_, i, j, workn_);
            respread_spectrum(gN_, workn_, gC_, workc_);
            spectrum_to_physical(gC_, workc_, strain_[c], workc2_);
            ++c;
        };
        if (d == 2) {
            emit(0, 0);
            emit(0, 1);
        } else {
            emit(0, 0);
            emit(1, 1);
            emit(0, 1);
            emit(0, 2);
            emit(1, 2);
        }
    }

    double strain_magnitude(std::size_t p) const {
        if (gN_.d == 2) {
            const double d00 = strain_[0][p], d01 = strain_[1][p];
            return std::sqrt(2.0 * (d00 * d00 + d01 * d01));
        }
        const double d00 = strain_[0][p], d11 = strain_[1][p];
        const double d01 = strain_[2][p], d02 = strain_[3][p], d12 = strain_[4][p];
        const double d22 = -d00 - d11;
        return std::sqrt(d00 * d00 + d11 * d11 + d22 * d22 +
                         2.0 * (d01 * d01 + d02 * d02 + d12 * d12));
    }

    /// Scales the strain planes in place into the total tensor
    /// (f(|D|)/|D| + eps (1 + |D|^2)) D and accumulates the two dissipation
    /// pairings. Returns false when the result is identically zero (flat
    /// branch, eps = 0). Throws on non-finite strain or on leaving the
    /// admissible set of a capped law.
    bool pointwise_total_stress() {
        const double flat = eval_.flat;
        const double eps = cfg_.eps;
        const std::size_t npts = gC_.size();
        double smax = 0.0;
        double diss_s = 0.0, diss_e = 0.0;
        bool any = eps > 0.0;
        for (std::size_t p = 0; p < npts; ++p) {
            const double s = strain_magnitude(p);
            if (!(s <= smax)) smax = s;
            const double s2 = s * s;
            const double ge = eps * (1.0 + s2);
            double g = ge;
            if (s > flat) {
                const double gs = eval_.magnitude(s) / s;
                g += gs;
                diss_s += gs * s2;  // S . Dv = f(s) s
                any = true;
            }
            diss_e += ge * s2;
            for (int c = 0; c < nind_; ++c) strain_[c][p] *= g;
        }
        last_max_strain_ = smax;
        const double hc = gC_.cell_volume();
        last_diss_S_ = diss_s * hc;
        last_diss_eps_ = diss_e * hc;
        if (!std::isfinite(smax))
            throw RhsError("symmetric gradient", "|Dv| is not finite");
        if (cfg_.law.has_strain_cap() && smax >= cfg_.law.M)
            throw DomainViolation("stress evaluation left the admissible set: |Dv|_inf = " +
                                  std::to_string(smax) + " >= M");
        return any;
    }

    void gather_rhs(std::vector<double>& dy) {
        const Grid& g = gN_;
        const int d = g.d;
        const double kap = g.kappa();
        const double amp = std::sqrt(2.0 * g.volume());
        const auto& modes = basis_->modes;
        dy.resize(2 * modes.size());
        auto tens = [&](const std::array<std::vector<cplx>, 6>& planes, int i, int j,
                        std::size_t f) -> cplx {
            // reconstruct the dependent diagonal of a trace-free tensor
            if (d == 2) {
                if (i == j) return i == 0 ? planes[0][f] : -planes[0][f];
                return planes[1][f];
            }
            if (i == j) {
                if (i == 0) return planes[0][f];
                if (i == 1) return planes[1][f];
                return -planes[0][f] - planes[1][f];
            }
            const int off = (i + j == 1) ? 2 : (i + j == 2 ? 3 : 4);
            return planes[off][f];
        };
        auto conv = [&](int i, int j, std::size_t f) -> cplx {
            int c;
            if (d == 2)
                c = (i == 0 && j == 0) ? 0 : ((i == 1 && j == 1) ? 2 : 1);
            else {
                int ii = std::min(i, j), jj = std::max(i, j);
                if (ii == 0)
                    c = jj;          // 00 -> 0, 01 -> 1, 02 -> 2
                else if (ii == 1)
                    c = 2 + jj;      // 11 -> 3, 12 -> 4
                else
                    c = 5;           // 22
            }
            return conv_spec_[c][f];
        };
        for (std::size_t jm = 0; jm < modes.size(); ++jm) {
            const Mode& m = modes[jm];
            std::array<int, 3> pi{0, 0, 0};
            for (int ax = 0; ax < d; ++ax) pi[ax] = wave_to_index(m.k[ax], g.N);
            const std::size_t f = flat_index(g, pi);
            cplx zdot(0.0, 0.0);
            for (int i = 0; i < d; ++i) {
                cplx div_i(0.0, 0.0);
                for (int j = 0; j < d; ++j) {
                    const cplx tij = tens(that_spec_, i, j, f) - conv(i, j, f);
                    div_i += cplx(0.0, kap * m.k[j]) * tij;
                }
                zdot += div_i * m.e[i];
            }
            zdot *= amp;
            dy[2 * jm] = zdot.real();
            dy[2 * jm + 1] = zdot.imag();
        }
    }

    SolverConfig cfg_;
    StressEval eval_;
    std::shared_ptr<const BasisIndex> basis_;
    Grid gN_, gQ_, gC_;
    int tcomp_ = 0, nind_ = 0;
    SpectrumVector uhat_;
    std::array<std::vector<double>, 3> vq_;
    std::vector<double> prodq_;
    std::array<std::vector<cplx>, 6> conv_spec_;
    std::array<std::vector<double>, 6> strain_;
    std::array<std::vector<cplx>, 6> that_spec_;
    std::vector<cplx> workn_, workq_, workq2_, workc_, workc2_;
    double last_max_strain_ = 0.0;
    double last_diss_S_ = 0.0;
    double last_diss_eps_ = 0.0;
};

/// Strain level at which a trial step is rejected outright: the regularized
/// law keeps a configurable margin below its frozen strain (the right-hand
/// side stiffens there), capped laws keep the same margin below M.
inline double strain_guard_level(const SolverConfig& cfg) {
    const double margin = cfg.safety_margin * (cfg.law.M - cfg.law.m);
    if (cfg.law.kind == LawKind::RegularizedEuler) return cfg.law.frozen_strain() - margin;
    return cfg.law.M - margin;
}

inline bool strain_guard_trips(const SolverConfig& cfg, double trial_strain) {
    if (cfg.law.kind == LawKind::ActivatedNavierStokes) return false;
    return trial_strain >= strain_guard_level(cfg);
}

namespace detail {
inline std::vector<double> realify(const SpectralVelocity& v) {
    std::vector<double> y(2 * v.n());
    for (int j = 0; j < v.n(); ++j) {
        y[2 * j] = v.z[j].real();
        y[2 * j + 1] = v.z[j].imag();
    }
    return y;
}
inline void unrealify(const std::vector<double>& y, SpectralVelocity& v) {
    for (int j = 0; j < v.n(); ++j) v.z[j] = cplx(y[2 * j], y[2 * j + 1]);
}
}  // namespace detail

/// Mollifies, projects onto the first n modes, and verifies that the
/// prepared strain field still clears the activation threshold.
inline SolverState prepare_initial(const SpectralVelocity& v0, const SolverConfig& cfg,
                                   GalerkinRhs& engine, InitialReport& report) {
    const double bound = cfg.initial_strain_bound();
    report.bound = bound;
    report.raw_strain_inf = sym_gradient_on(v0, engine.eval_grid()).max_magnitude();
    if (!(report.raw_strain_inf < bound))
        throw ConfigError("initial data rejected: ||D v0||_inf = " +
                          std::to_string(report.raw_strain_inf) +
                          " does not satisfy the sub-activation bound " + std::to_string(bound));

    SpectralVelocity v0e = cfg.eps > 0.0 ? mollify(v0, cfg.eps) : v0;
    report.mollified_strain_inf = sym_gradient_on(v0e, engine.eval_grid()).max_magnitude();
    if (!(report.mollified_strain_inf < bound))
        throw ConfigError("mollified initial data violates the sub-activation bound");

    SolverState st;
    st.time = 0.0;
    st.v = project_onto(v0e, engine.basis());
    report.projected_strain_inf = sym_gradient_on(st.v, engine.eval_grid()).max_magnitude();
    if (!(report.projected_strain_inf < bound))
        throw ConfigError("n too small for initial data: ||P^n D v0_eps||_inf = " +
                          std::to_string(report.projected_strain_inf) + " >= " +
                          std::to_string(bound));
    engine.refresh_cache(st);
    return st;
}

namespace detail {

struct RunLoop {
    SolverConfig cfg;
    GalerkinRhs* engine = nullptr;
    Trajectory* traj = nullptr;
    const IntegrateOptions* opts = nullptr;
    double next_snapshot = 0.0;
    int snapshot_index = 0;

    void record(double t, const std::vector<double>& y, bool force_snapshot) {
        DiagnosticsRecord rec = engine->scan(t, y);
        const std::size_t nmodes = engine->basis()->modes.size();
        // the integrator carries the dissipation integrals as quadrature
        // variables in the state tail
        rec.cum_dissipation_S = y[2 * nmodes];
        rec.cum_dissipation_eps = y[2 * nmodes + 1];
        traj->diagnostics.push_back(rec);
        if (opts->on_record) opts->on_record(rec);
        if (opts->store_coefficients) {
            std::vector<cplx> z(nmodes);
            for (std::size_t j = 0; j < z.size(); ++j) z[j] = cplx(y[2 * j], y[2 * j + 1]);
            traj->coeff_history.emplace_back(t, std::move(z));
        }
        const bool due =
            cfg.snapshot_every > 0.0 && t >= next_snapshot - 1e-12 * std::max(1.0, cfg.t_end);
        if (force_snapshot || due) {
            SolverState st;
            st.time = t;
            st.v = SpectralVelocity(engine->basis());
            unrealify(y, st.v);
            engine->refresh_cache(st);
            traj->states.push_back(std::move(st));
            if (opts->on_snapshot) opts->on_snapshot(traj->states.back(), snapshot_index);
            ++snapshot_index;
            if (due) {
                while (next_snapshot <= t) next_snapshot += cfg.snapshot_every;
            }
        }
    }
};

}  // namespace detail

/// Integrates the Galerkin system from prepared initial data to t_end with
/// adaptive Dormand-Prince stepping. Returns a partial trajectory with a
/// failure annotation instead of throwing when the run cannot continue.
inline Trajectory integrate(const SpectralVelocity& v0, const SolverConfig& cfg,
                            const IntegrateOptions& opts = {}) {
    cfg.validate();
    Trajectory traj;
    traj.config = cfg;

    GalerkinRhs engine(cfg, build_basis(cfg.grid, cfg.n));
    SolverState st0;
    try {
        st0 = prepare_initial(v0, cfg, engine, traj.initial);
    } catch (const std::exception& e) {
        traj.failure = e.what();
        return traj;
    }

    std::vector<double> y = detail::realify(st0.v);
    y.resize(engine.state_dim(), 0.0);  // dissipation-integral tail starts at zero
    const std::size_t dim = y.size();
    Dopri5Stepper stepper(dim);
    PiController pi;
    OdeRhs rhs = [&engine](double t, const std::vector<double>& yy, std::vector<double>& dy) {
        engine(t, yy, dy);
    };

    detail::RunLoop loop{cfg, &engine, &traj, &opts, cfg.snapshot_every, 0};
    loop.record(0.0, y, true);

    const double sub_activation_bound = cfg.initial_strain_bound();
    const bool inviscid_reference = cfg.eps == 0.0;

    double t = 0.0;
    double dt = std::min(cfg.dt_init, cfg.t_end);
    const double dt_floor = 1e-12 * cfg.t_end;
    std::vector<double> ynew(dim), err(dim);

    auto fail = [&](const std::string& why) {
        const DiagnosticsRecord& last = traj.diagnostics.back();
        traj.failure = why + " (t = " + std::to_string(t) +
                       ", ||Dv||_inf = " + std::to_string(last.Dv_max) +
                       ", activation_fraction = " + std::to_string(last.activation_fraction) + ")";
    };

    try {
        rhs(0.0, y, stepper.k1());
    } catch (const std::exception& e) {
        fail(std::string("initial right-hand side failed: ") + e.what());
        return traj;
    }

    long max_steps = 100000000L;
    while (t < cfg.t_end && max_steps-- > 0) {
        const bool last = dt >= cfg.t_end - t;
        if (last) dt = cfg.t_end - t;
        if (dt < dt_floor) {
            fail("stiffness failure: step size underflow");
            return traj;
        }
        bool threw = false;
        try {
            stepper.step(rhs, t, y, dt, ynew, err);
        } catch (const std::exception&) {
            threw = true;
        }
        if (threw) {
            dt *= 0.5;
            pi.on_reject();
            continue;
        }
        const double en = error_norm(err, y, ynew, cfg.rtol, cfg.atol);
        if (!std::isfinite(en)) {
            dt *= 0.5;
            pi.on_reject();
            continue;
        }
        const double trial_strain = engine.last_max_strain();  // from the FSAL stage
        if (strain_guard_trips(cfg, trial_strain)) {
            dt *= 0.5;
            pi.on_reject();
            continue;
        }
        if (en > 1.0) {
            dt *= pi.next_factor(en);
            pi.on_reject();
            continue;
        }
        // accepted
        t = last ? cfg.t_end : t + dt;
        y.swap(ynew);
        stepper.promote_fsal();
        pi.on_accept(en);
        traj.accepted_dt.push_back(dt);
        loop.record(t, y, /*force_snapshot=*/t >= cfg.t_end);
        if (inviscid_reference && traj.diagnostics.back().Dv_max >= sub_activation_bound) {
            fail("inviscid reference run reached the activation threshold");
            return traj;
        }
        dt *= pi.next_factor(en);
    }
    if (t < cfg.t_end) {
        fail("step budget exhausted");
        return traj;
    }
    traj.completed = true;
    return traj;
}

/// Re-integrates with the step sequence pinned to the given accepted nodes
/// (no adaptivity); used to sample two trajectories on a common grid. When
/// `dts` carries the original accepted step sizes, the replay arithmetic is
/// bit-identical to the adaptive pass.
inline Trajectory integrate_on_nodes(const SpectralVelocity& v0, const SolverConfig& cfg,
                                     const std::vector<double>& nodes,
                                     const IntegrateOptions& opts = {},
                                     const std::vector<double>& dts = {}) {
    cfg.validate();
    if (nodes.size() < 2 || nodes.front() != 0.0)
        throw std::invalid_argument("integrate_on_nodes: nodes must start at t = 0");
    if (!dts.empty() && dts.size() + 1 != nodes.size())
        throw std::invalid_argument("integrate_on_nodes: need one dt per node interval");
    Trajectory traj;
    traj.config = cfg;
    GalerkinRhs engine(cfg, build_basis(cfg.grid, cfg.n));
    SolverState st0;
    try {
        st0 = prepare_initial(v0, cfg, engine, traj.initial);
    } catch (const std::exception& e) {
        traj.failure = e.what();
        return traj;
    }
    std::vector<double> y = detail::realify(st0.v);
    y.resize(engine.state_dim(), 0.0);
    Dopri5Stepper stepper(y.size());
    OdeRhs rhs = [&engine](double t, const std::vector<double>& yy, std::vector<double>& dy) {
        engine(t, yy, dy);
    };
    detail::RunLoop loop{cfg, &engine, &traj, &opts, cfg.snapshot_every, 0};
    loop.record(0.0, y, true);
    std::vector<double> ynew(y.size()), err(y.size());
    try {
        rhs(0.0, y, stepper.k1());
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double t = nodes[i - 1];
            const double dt = dts.empty() ? nodes[i] - t : dts[i - 1];
            stepper.step(rhs, t, y, dt, ynew, err);
            y.swap(ynew);
            stepper.promote_fsal();
            traj.accepted_dt.push_back(dt);
            loop.record(nodes[i], y, false);
        }
    } catch (const std::exception& e) {
        traj.failure = e.what();
        return traj;
    }
    traj.completed = true;
    return traj;
}

}  // namespace actev
