#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "actev/basis.hpp"
#include "actev/fft.hpp"
#include "actev/grid.hpp"

namespace actev {

/// Divergence-free, zero-mean velocity expressed in the first n eigenmodes.
/// One complex coefficient per mode; the physical field is
///   v(x) = sum_j sqrt(2/L^d) e_j [Re z_j cos(kappa k_j.x) - Im z_j sin(kappa k_j.x)],
/// so ||v||_2^2 = sum_j |z_j|^2.
struct SpectralVelocity {
    std::shared_ptr<const BasisIndex> basis;
    std::vector<cplx> z;

    SpectralVelocity() = default;
    explicit SpectralVelocity(std::shared_ptr<const BasisIndex> b)
        : basis(std::move(b)), z(basis->n(), cplx(0.0, 0.0)) {}

    const Grid& grid() const { return basis->grid; }
    int n() const { return static_cast<int>(z.size()); }

    double l2_norm_sq() const {
        double s = 0.0;
        for (const auto& c : z) s += std::norm(c);
        return s;
    }
    double l2_norm() const { return std::sqrt(l2_norm_sq()); }
};

/// Full-grid spectrum of the velocity (both +-k entries populated).
inline SpectrumVector scatter(const SpectralVelocity& v) {
    const Grid& g = v.grid();
    SpectrumVector out(g);
    const double amp = 1.0 / std::sqrt(2.0 * g.volume());
    for (int j = 0; j < v.n(); ++j) {
        const Mode& m = v.basis->modes[j];
        std::array<int, 3> pidx{0, 0, 0}, nidx{0, 0, 0};
        for (int ax = 0; ax < g.d; ++ax) {
            pidx[ax] = wave_to_index(m.k[ax], g.N);
            nidx[ax] = wave_to_index(-m.k[ax], g.N);
        }
        const std::size_t fp = flat_index(g, pidx), fn = flat_index(g, nidx);
        const cplx c = v.z[j] * amp;
        for (int i = 0; i < g.d; ++i) {
            out.comp[i][fp] += c * m.e[i];
            out.comp[i][fn] += std::conj(c) * m.e[i];
        }
    }
    return out;
}

/// Coefficients of the basis projection of a full-grid spectrum (adjoint of
/// scatter); projects onto the divergence-free part automatically since the
/// polarizations are orthogonal to k.
inline SpectralVelocity gather(std::shared_ptr<const BasisIndex> basis,
                               const SpectrumVector& f) {
    SpectralVelocity v(std::move(basis));
    const Grid& g = v.grid();
    const double amp = std::sqrt(2.0 * g.volume());
    for (int j = 0; j < v.n(); ++j) {
        const Mode& m = v.basis->modes[j];
        std::array<int, 3> pidx{0, 0, 0};
        for (int ax = 0; ax < g.d; ++ax) pidx[ax] = wave_to_index(m.k[ax], g.N);
        const std::size_t fp = flat_index(g, pidx);
        cplx c(0.0, 0.0);
        for (int i = 0; i < g.d; ++i) c += f.comp[i][fp] * m.e[i];
        v.z[j] = c * amp;
    }
    return v;
}

/// Zeroes every coefficient beyond the first n modes. Norm non-increasing,
/// idempotent, and nested: truncating to n then m equals truncating to min.
inline SpectralVelocity galerkin_truncate(const SpectralVelocity& v, int n) {
    if (n < 1 || n > v.n())
        throw std::invalid_argument("galerkin_truncate: n must lie in [1, v.n()]");
    SpectralVelocity out = v;
    for (int j = n; j < out.n(); ++j) out.z[j] = cplx(0.0, 0.0);
    return out;
}

/// Projection onto a (possibly smaller) basis prefix on the same grid.
inline SpectralVelocity project_onto(const SpectralVelocity& v,
                                     std::shared_ptr<const BasisIndex> basis) {
    SpectralVelocity out(std::move(basis));
    const int shared = std::min(out.n(), v.n());
    for (int j = 0; j < shared; ++j) out.z[j] = v.z[j];
    return out;
}

inline VectorField to_physical(const SpectralVelocity& v) {
    const SpectrumVector spec = scatter(v);
    const Grid& g = v.grid();
    VectorField out(g);
    std::vector<cplx> work;
    for (int i = 0; i < g.d; ++i) spectrum_to_physical(g, spec.comp[i], out.comp[i], work);
    return out;
}

/// Project physical samples of a velocity field onto a basis.
inline SpectralVelocity from_physical(std::shared_ptr<const BasisIndex> basis,
                                      const VectorField& f) {
    const Grid& g = f.grid;
    SpectrumVector spec(g);
    std::vector<cplx> work;
    for (int i = 0; i < g.d; ++i) physical_to_spectrum(g, f.comp[i], spec.comp[i], work);
    return gather(std::move(basis), spec);
}

namespace detail {
/// Spectrum of component (i, j) of the symmetric gradient,
/// D_ij(k) = i kappa (k_i u_j + k_j u_i)/2.
inline void sym_gradient_component(const SpectrumVector& u, int i, int j,
                                   std::vector<cplx>& out) {
    const Grid& g = u.grid;
    out.assign(g.size(), cplx(0.0, 0.0));
    const double kap = g.kappa();
    for_each_index(g, [&](std::size_t flat, const std::array<int, 3>& idx) {
        std::array<int, 3> k{0, 0, 0};
        for (int ax = 0; ax < g.d; ++ax) k[ax] = index_to_wave(idx[ax], g.N);
        const cplx ik(0.0, kap);
        out[flat] = 0.5 * ik *
                    (static_cast<double>(k[i]) * u.comp[j][flat] +
                     static_cast<double>(k[j]) * u.comp[i][flat]);
    });
}
}  // namespace detail

/// Symmetric velocity gradient D v = (grad v + grad v^T)/2 evaluated on the
/// nodes of `target` (pass v.grid() for the native resolution, or a padded
/// grid for dealiased pointwise work).
inline SymTensorField sym_gradient_on(const SpectralVelocity& v, const Grid& target) {
    const SpectrumVector spec = scatter(v);
    SymTensorField D(target);
    std::vector<cplx> comp, padded, work;
    const Grid& g = v.grid();
    for (int i = 0; i < g.d; ++i)
        for (int j = i; j < g.d; ++j) {
            detail::sym_gradient_component(spec, i, j, comp);
            respread_spectrum(g, comp, target, padded);
            spectrum_to_physical(target, padded, D.comp[D.comp_index(i, j)], work);
        }
    return D;
}

inline SymTensorField sym_gradient(const SpectralVelocity& v) {
    return sym_gradient_on(v, v.grid());
}

/// Max |div v| over the grid, a consistency diagnostic (zero by construction
/// up to round-off for basis-built fields).
inline double max_divergence(const SpectrumVector& u) {
    const Grid& g = u.grid;
    std::vector<cplx> divspec(g.size(), cplx(0.0, 0.0));
    const double kap = g.kappa();
    for_each_index(g, [&](std::size_t flat, const std::array<int, 3>& idx) {
        cplx s(0.0, 0.0);
        for (int ax = 0; ax < g.d; ++ax)
            s += static_cast<double>(index_to_wave(idx[ax], g.N)) * u.comp[ax][flat];
        divspec[flat] = cplx(0.0, kap) * s;
    });
    std::vector<double> phys;
    std::vector<cplx> work;
    spectrum_to_physical(g, divspec, phys, work);
    double mx = 0.0;
    for (double x : phys) mx = std::max(mx, std::abs(x));
    return mx;
}

/// Pointwise product of two scalar physical fields with zero-padding
/// dealiasing (3/2 padding for quadratic content, 2x for cubic), returned as
/// a spectrum on the input grid. Exact for polynomial nonlinearities of the
/// stated degree.
inline Spectrum product_dealiased(const ScalarField& u, const ScalarField& w, int degree) {
    if (u.grid != w.grid) throw std::invalid_argument("product_dealiased: grid mismatch");
    const Grid& g = u.grid;
    const Grid fine = dealias_grid(g, degree);
    std::vector<cplx> su, sw, work, pu, pw;
    physical_to_spectrum(g, u.v, su, work);
    physical_to_spectrum(g, w.v, sw, work);
    respread_spectrum(g, su, fine, pu);
    respread_spectrum(g, sw, fine, pw);
    std::vector<double> fu, fw;
    spectrum_to_physical(fine, pu, fu, work);
    spectrum_to_physical(fine, pw, fw, work);
    for (std::size_t i = 0; i < fine.size(); ++i) fu[i] *= fw[i];
    std::vector<cplx> prod;
    physical_to_spectrum(fine, fu, prod, work);
    Spectrum out(g);
    respread_spectrum(fine, prod, g, out.a);
    return out;
}

/// Unnormalized DFT of the discrete mollifier: a nonnegative, unit-mass bump
/// kernel omega(r) ~ exp(-1/(1 - r^2)) of radius eps sampled at the grid
/// nodes (minimum-image distance) and renormalized to exact unit mass.
/// Multiplying a spectrum by this is the discrete periodic convolution.
inline std::vector<double> mollifier_multiplier(const Grid& g, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps must be positive");
    if (eps >= g.L / 4.0)
        throw std::invalid_argument("mollify: kernel too wide, eps must be < L/4");
    std::vector<double> w(g.size(), 0.0);
    const double h = g.h();
    double total = 0.0;
    for_each_index(g, [&](std::size_t flat, const std::array<int, 3>& idx) {
        double r2 = 0.0;
        for (int ax = 0; ax < g.d; ++ax) {
            double x = idx[ax] * h;
            if (x > g.L / 2.0) x -= g.L;  // minimum image
            r2 += x * x;
        }
        const double rho2 = r2 / (eps * eps);
        if (rho2 < 1.0) {
            w[flat] = std::exp(-1.0 / (1.0 - rho2));
            total += w[flat];
        }
    });
    for (auto& x : w) x /= total;

    std::vector<cplx> cw(g.size()), spec(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) cw[i] = cplx(w[i], 0.0);
    Fft::dft(g.d, g.N, cw.data(), spec.data(), FFTW_FORWARD);
    std::vector<double> mult(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) mult[i] = spec[i].real();
    return mult;
}

/// Convolution with the discrete bump kernel; preserves divergence-freeness
/// and the zero mean, and contracts every discrete L^p norm of D v.
inline SpectralVelocity mollify(const SpectralVelocity& v, double eps) {
    const Grid& g = v.grid();
    const std::vector<double> mult = mollifier_multiplier(g, eps);
    SpectralVelocity out = v;
    for (int j = 0; j < v.n(); ++j) {
        const Mode& m = v.basis->modes[j];
        std::array<int, 3> pidx{0, 0, 0};
        for (int ax = 0; ax < g.d; ++ax) pidx[ax] = wave_to_index(m.k[ax], g.N);
        out.z[j] *= mult[flat_index(g, pidx)];
    }
    return out;
}

}  // namespace actev
