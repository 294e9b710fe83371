#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "actev/errors.hpp"
#include "actev/symtensor.hpp"

namespace actev {

/// Uniform periodic box (0, L)^d sampled with N points per axis.
struct Grid {
    int d = 2;
    double L = 2.0 * M_PI;
    int N = 32;

    Grid() = default;
    Grid(int d_, double L_, int N_) : d(d_), L(L_), N(N_) { validate(); }

    void validate() const {
        if (d != 2 && d != 3) throw ConfigError("grid: d must be 2 or 3");
        if (!(L > 0.0)) throw ConfigError("grid: L must be positive");
        if (N < 4 || N % 2 != 0) throw ConfigError("grid: N must be even and >= 4");
    }

    double h() const { return L / N; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(N);
        return s;
    }
    double cell_volume() const { return std::pow(h(), d); }
    double volume() const { return std::pow(L, d); }
    /// Base wavenumber 2 pi / L.
    double kappa() const { return 2.0 * M_PI / L; }

    bool operator==(const Grid& o) const { return d == o.d && L == o.L && N == o.N; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Integer wavevector of the axis index on an N-point grid
/// (indices above N/2 represent negative frequencies).
inline int index_to_wave(int idx, int N) { return idx <= N / 2 ? idx : idx - N; }
inline int wave_to_index(int k, int N) { return k >= 0 ? k : k + N; }

/// Visits every grid node of an N^d lattice; f(flat_index, idx[3]) with the
/// unused third component pinned to 0 for d = 2.
template <typename F>
inline void for_each_index(const Grid& g, F&& f) {
    std::array<int, 3> idx{0, 0, 0};
    if (g.d == 2) {
        std::size_t flat = 0;
        for (idx[0] = 0; idx[0] < g.N; ++idx[0])
            for (idx[1] = 0; idx[1] < g.N; ++idx[1]) f(flat++, idx);
    } else {
        std::size_t flat = 0;
        for (idx[0] = 0; idx[0] < g.N; ++idx[0])
            for (idx[1] = 0; idx[1] < g.N; ++idx[1])
                for (idx[2] = 0; idx[2] < g.N; ++idx[2]) f(flat++, idx);
    }
}

inline std::size_t flat_index(const Grid& g, const std::array<int, 3>& idx) {
    std::size_t f = static_cast<std::size_t>(idx[0]);
    for (int ax = 1; ax < g.d; ++ax) f = f * g.N + idx[ax];
    return f;
}

struct ScalarField {
    Grid grid;
    std::vector<double> v;
    explicit ScalarField(const Grid& g) : grid(g), v(g.size(), 0.0) {}
};

struct VectorField {
    Grid grid;
    std::array<std::vector<double>, 3> comp;
    explicit VectorField(const Grid& g) : grid(g) {
        for (int i = 0; i < g.d; ++i) comp[i].assign(g.size(), 0.0);
    }
    double magnitude(std::size_t p) const {
        double s = 0.0;
        for (int i = 0; i < grid.d; ++i) s += comp[i][p] * comp[i][p];
        return std::sqrt(s);
    }
};

/// Symmetric tensor field stored as independent component planes in the
/// same order as SymTensor.
struct SymTensorField {
    Grid grid;
    std::array<std::vector<double>, 6> comp;
    explicit SymTensorField(const Grid& g) : grid(g) {
        for (int i = 0; i < ncomp(); ++i) comp[i].assign(g.size(), 0.0);
    }
    int ncomp() const { return grid.d * (grid.d + 1) / 2; }
    int comp_index(int i, int j) const { return SymTensor(grid.d).comp_index(i, j); }
    SymTensor at(std::size_t p) const {
        SymTensor t(grid.d);
        for (int i = 0; i < ncomp(); ++i) t.c[i] = comp[i][p];
        return t;
    }
    /// Frobenius magnitude at one grid node.
    double magnitude(std::size_t p) const {
        double s = 0.0;
        for (int i = 0; i < grid.d; ++i) s += comp[i][p] * comp[i][p];
        double off = 0.0;
        for (int i = grid.d; i < ncomp(); ++i) off += comp[i][p] * comp[i][p];
        return std::sqrt(s + 2.0 * off);
    }
    double max_magnitude() const {
        double mx = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p) mx = std::max(mx, magnitude(p));
        return mx;
    }
};

namespace detail {
template <typename MagFn>
double lp_norm_impl(const Grid& g, std::size_t npts, MagFn&& mag, double p) {
    if (std::isinf(p)) {
        double mx = 0.0;
        for (std::size_t i = 0; i < npts; ++i) mx = std::max(mx, mag(i));
        return mx;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or inf");
    double s = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < npts; ++i) {
            const double v = mag(i);
            s += v * v;
        }
    } else {
        for (std::size_t i = 0; i < npts; ++i) s += std::pow(mag(i), p);
    }
    return std::pow(g.cell_volume() * s, 1.0 / p);
}
}  // namespace detail

/// Discrete L^p norm by grid quadrature with weight h^d; p = inf is the grid max.
inline double lp_norm(const ScalarField& f, double p) {
    return detail::lp_norm_impl(f.grid, f.grid.size(),
                                [&f](std::size_t i) { return std::abs(f.v[i]); }, p);
}
inline double lp_norm(const VectorField& f, double p) {
    return detail::lp_norm_impl(f.grid, f.grid.size(),
                                [&f](std::size_t i) { return f.magnitude(i); }, p);
}
inline double lp_norm(const SymTensorField& f, double p) {
    return detail::lp_norm_impl(f.grid, f.grid.size(),
                                [&f](std::size_t i) { return f.magnitude(i); }, p);
}

}  // namespace actev
