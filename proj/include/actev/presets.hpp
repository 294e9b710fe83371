#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "actev/errors.hpp"
#include "actev/velocity.hpp"

namespace actev {

/// Rescales a velocity so ||D v||_inf hits exactly `target` (the strain bound
/// is positively homogeneous in the amplitude). Measured on the cubic
/// dealiasing grid, the same sampling the solver guards use.
inline SpectralVelocity rescale_to_strain(const SpectralVelocity& v, double target) {
    const double cur = sym_gradient_on(v, dealias_grid(v.grid(), 3)).max_magnitude();
    if (!(cur > 0.0)) throw ConfigError("initial preset produced a zero strain field");
    SpectralVelocity out = v;
    const double s = target / cur;
    for (auto& z : out.z) z *= s;
    return out;
}

/// Taylor-Green vortex on the periodic box, scaled so ||D v0||_inf equals
/// `strain_target`. d = 2: (sin kx cos ky, -cos kx sin ky); d = 3 uses the
/// classical single-mode vortex with a quiescent third component.
inline SpectralVelocity taylor_green(std::shared_ptr<const BasisIndex> basis,
                                     double strain_target) {
    const Grid& g = basis->grid;
    const double kap = g.kappa();
    VectorField f(g);
    for_each_index(g, [&](std::size_t p, const std::array<int, 3>& idx) {
        const double x = idx[0] * g.h(), y = idx[1] * g.h();
        const double z = g.d == 3 ? idx[2] * g.h() : 0.0;
        if (g.d == 2) {
            f.comp[0][p] = std::sin(kap * x) * std::cos(kap * y);
            f.comp[1][p] = -std::cos(kap * x) * std::sin(kap * y);
        } else {
            f.comp[0][p] = std::sin(kap * x) * std::cos(kap * y) * std::cos(kap * z);
            f.comp[1][p] = -std::cos(kap * x) * std::sin(kap * y) * std::cos(kap * z);
            f.comp[2][p] = 0.0;
        }
    });
    return rescale_to_strain(from_physical(std::move(basis), f), strain_target);
}

namespace detail {
/// Deterministic uniform/gaussian stream built on the mt19937_64 engine only
/// (std distributions are implementation-defined and would break
/// reproducibility guarantees across standard libraries).
struct DetRng {
    std::mt19937_64 eng;
    bool has_spare = false;
    double spare = 0.0;
    explicit DetRng(std::uint64_t seed) : eng(seed) {}
    double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double gaussian() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare = r * std::sin(th);
        has_spare = true;
        return r * std::cos(th);
    }
};
}  // namespace detail

/// Divergence-free random field: independent complex gaussian coefficients on
/// every mode whose |k| lies in [band_lo, band_hi], rescaled to the requested
/// ||D v0||_inf. Deterministic per seed.
inline SpectralVelocity random_band(std::shared_ptr<const BasisIndex> basis,
                                    std::uint64_t seed, double band_lo, double band_hi,
                                    double strain_target) {
    if (!(band_lo >= 0.0 && band_hi >= band_lo))
        throw ConfigError("random_band: band must satisfy 0 <= lo <= hi");
    SpectralVelocity v(std::move(basis));
    detail::DetRng rng(seed);
    bool any = false;
    for (int j = 0; j < v.n(); ++j) {
        const Mode& m = v.basis->modes[j];
        double k2 = 0.0;
        for (int ax = 0; ax < v.grid().d; ++ax)
            k2 += static_cast<double>(m.k[ax]) * m.k[ax];
        const double kmag = std::sqrt(k2);
        if (kmag < band_lo || kmag > band_hi) continue;
        v.z[j] = cplx(rng.gaussian(), rng.gaussian());
        any = true;
    }
    if (!any) throw ConfigError("random_band: no basis mode falls inside the band");
    return rescale_to_strain(v, strain_target);
}

}  // namespace actev
