#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "actev/errors.hpp"
#include "actev/fft.hpp"
#include "actev/grid.hpp"

namespace actev {

/// One divergence-free eigenmode of the periodic Stokes problem: a canonical
/// wavevector plus a real unit polarization orthogonal to it. Each mode spans
/// two real degrees of freedom (cosine and sine), carried as one complex
/// coefficient.
struct Mode {
    std::array<int, 3> k{0, 0, 0};
    int pol = 0;
    double lambda = 0.0;                 // (2 pi / L)^2 |k|^2
    std::array<double, 3> e{0, 0, 0};    // polarization, e . k = 0, |e| = 1
};

/// Canonical representative of the +-k pair: first nonzero component positive.
inline bool wave_is_canonical(const std::array<int, 3>& k, int d) {
    for (int i = 0; i < d; ++i) {
        if (k[i] > 0) return true;
        if (k[i] < 0) return false;
    }
    return false;  // zero vector excluded
}

/// d-1 polarization vectors for a wavevector, built by Gram-Schmidt applied
/// to the coordinate axes in order (seed axis = lowest-index axis not
/// collinear with k).
inline std::vector<std::array<double, 3>> polarizations(const std::array<int, 3>& k, int d) {
    double kn = 0.0;
    for (int i = 0; i < d; ++i) kn += static_cast<double>(k[i]) * k[i];
    kn = std::sqrt(kn);
    std::array<double, 3> khat{0, 0, 0};
    for (int i = 0; i < d; ++i) khat[i] = k[i] / kn;

    std::vector<std::array<double, 3>> pols;
    for (int axis = 0; axis < d && static_cast<int>(pols.size()) < d - 1; ++axis) {
        // skip an axis exactly collinear with k (k has a single nonzero entry)
        bool collinear = k[axis] != 0;
        for (int j = 0; j < d; ++j)
            if (j != axis && k[j] != 0) collinear = false;
        if (collinear) continue;
        std::array<double, 3> v{0, 0, 0};
        v[axis] = 1.0;
        double dk = v[axis] * khat[axis];
        for (int j = 0; j < d; ++j) v[j] -= dk * khat[j];
        for (const auto& p : pols) {
            double dp = 0.0;
            for (int j = 0; j < d; ++j) dp += v[j] * p[j];
            for (int j = 0; j < d; ++j) v[j] -= dp * p[j];
        }
        double vn = 0.0;
        for (int j = 0; j < d; ++j) vn += v[j] * v[j];
        vn = std::sqrt(vn);
        if (vn < 1e-12) continue;
        for (int j = 0; j < d; ++j) v[j] /= vn;
        pols.push_back(v);
    }
    return pols;
}

/// First n eigenmodes in nondecreasing eigenvalue order, ties broken by
/// (|k|^2, lexicographic k, polarization index).
struct BasisIndex {
    Grid grid;
    std::vector<Mode> modes;
    explicit BasisIndex(const Grid& g) : grid(g) {}
    int n() const { return static_cast<int>(modes.size()); }
};

/// Number of representable divergence-free modes: all canonical sub-Nyquist
/// wavevectors times (d - 1) polarizations.
inline int basis_capacity(const Grid& g) {
    const int kmax = g.N / 2 - 1;
    std::int64_t lattice = 1;
    for (int i = 0; i < g.d; ++i) lattice *= (2 * kmax + 1);
    return static_cast<int>((lattice - 1) / 2) * (g.d - 1);
}

inline std::shared_ptr<const BasisIndex> build_basis(const Grid& g, int n) {
    if (n < 1) throw ConfigError("build_basis: n must be positive");
    const int cap = basis_capacity(g);
    if (n > cap)
        throw ConfigError("build_basis: n = " + std::to_string(n) +
                          " exceeds the grid capacity of " + std::to_string(cap) + " modes");
    const int kmax = g.N / 2 - 1;
    struct Entry {
        std::int64_t k2;
        std::array<int, 3> k;
    };
    std::vector<Entry> waves;
    std::array<int, 3> k{0, 0, 0};
    const int lo = -kmax;
    auto visit = [&](const std::array<int, 3>& kk) {
        if (!wave_is_canonical(kk, g.d)) return;
        std::int64_t k2 = 0;
        for (int i = 0; i < g.d; ++i) k2 += static_cast<std::int64_t>(kk[i]) * kk[i];
        waves.push_back({k2, kk});
    };
    if (g.d == 2) {
        for (k[0] = lo; k[0] <= kmax; ++k[0])
            for (k[1] = lo; k[1] <= kmax; ++k[1]) visit(k);
    } else {
        for (k[0] = lo; k[0] <= kmax; ++k[0])
            for (k[1] = lo; k[1] <= kmax; ++k[1])
                for (k[2] = lo; k[2] <= kmax; ++k[2]) visit(k);
    }
    std::sort(waves.begin(), waves.end(), [](const Entry& a, const Entry& b) {
        if (a.k2 != b.k2) return a.k2 < b.k2;
        return a.k < b.k;
    });

    auto basis = std::make_shared<BasisIndex>(g);
    basis->modes.reserve(n);
    const double kap2 = g.kappa() * g.kappa();
    for (const auto& w : waves) {
        const auto pols = polarizations(w.k, g.d);
        for (int p = 0; p < static_cast<int>(pols.size()); ++p) {
            Mode m;
            m.k = w.k;
            m.pol = p;
            m.lambda = kap2 * static_cast<double>(w.k2);
            m.e = pols[p];
            basis->modes.push_back(m);
            if (basis->n() == n) return basis;
        }
    }
    return basis;
}

/// Leray projection in spectral space: v(k) <- (I - k k^T/|k|^2) v(k),
/// zero mode pinned to zero. Idempotent.
inline void leray_project(SpectrumVector& f) {
    const Grid& g = f.grid;
    for_each_index(g, [&](std::size_t flat, const std::array<int, 3>& idx) {
        std::array<int, 3> k{0, 0, 0};
        std::int64_t k2 = 0;
        for (int ax = 0; ax < g.d; ++ax) {
            k[ax] = index_to_wave(idx[ax], g.N);
            k2 += static_cast<std::int64_t>(k[ax]) * k[ax];
        }
        if (k2 == 0) {
            for (int i = 0; i < g.d; ++i) f.comp[i][flat] = cplx(0.0, 0.0);
            return;
        }
        cplx kdot(0.0, 0.0);
        for (int i = 0; i < g.d; ++i) kdot += static_cast<double>(k[i]) * f.comp[i][flat];
        kdot /= static_cast<double>(k2);
        for (int i = 0; i < g.d; ++i) f.comp[i][flat] -= static_cast<double>(k[i]) * kdot;
    });
}

}  // namespace actev
