#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace actev {

/// Symmetric d x d tensor (d = 2 or 3), upper triangle stored.
///
/// Component order: d = 2 -> [xx, yy, xy]; d = 3 -> [xx, yy, zz, xy, xz, yz].
/// All norms and inner products are Frobenius ones, i.e. off-diagonal
/// entries count twice.
struct SymTensor {
    int d = 3;
    std::array<double, 6> c{};  // unused tail stays zero for d = 2

    SymTensor() = default;
    explicit SymTensor(int dim) : d(dim) {
        if (d != 2 && d != 3) throw std::invalid_argument("SymTensor: dimension must be 2 or 3");
    }

    static SymTensor zero(int dim) { return SymTensor(dim); }

    int ncomp() const { return d * (d + 1) / 2; }

    /// Flat index of entry (i, j), i <= j.
    int comp_index(int i, int j) const {
        if (i > j) std::swap(i, j);
        if (i == j) return i;
        if (d == 2) return 2;             // xy
        return 2 + i + j;                 // xy -> 3, xz -> 4, yz -> 5
    }

    double operator()(int i, int j) const { return c[comp_index(i, j)]; }
    void set(int i, int j, double v) { c[comp_index(i, j)] = v; }

    /// Frobenius inner product sum_ij A_ij B_ij.
    double dot(const SymTensor& o) const {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += c[i] * o.c[i];
        double off = 0.0;
        for (int i = d; i < ncomp(); ++i) off += c[i] * o.c[i];
        return s + 2.0 * off;
    }

    double norm() const { return std::sqrt(dot(*this)); }

    SymTensor& operator+=(const SymTensor& o) {
        for (int i = 0; i < ncomp(); ++i) c[i] += o.c[i];
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o) {
        for (int i = 0; i < ncomp(); ++i) c[i] -= o.c[i];
        return *this;
    }
    SymTensor& operator*=(double s) {
        for (int i = 0; i < ncomp(); ++i) c[i] *= s;
        return *this;
    }

    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
    friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
};

}  // namespace actev
