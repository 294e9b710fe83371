#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "actev/grid.hpp"

namespace actev {

using cplx = std::complex<double>;

/// Thin FFTW wrapper. Plans are cached per (rank, N, sign) and created under a
/// global lock (FFTW planning is not thread-safe); execution on caller buffers
/// uses the new-array interface and is safe from multiple threads.
class Fft {
  public:
    /// Unnormalized transform: sign = FFTW_FORWARD sums exp(-i k x),
    /// sign = FFTW_BACKWARD sums exp(+i k x).
    static void dft(int rank, int N, cplx* in, cplx* out, int sign) {
        fftw_plan plan = plan_for(rank, N, sign);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    }

  private:
    static fftw_plan plan_for(int rank, int N, int sign) {
        static std::mutex mu;
        static std::map<std::tuple<int, int, int>, fftw_plan> cache;
        std::lock_guard<std::mutex> lock(mu);
        const auto key = std::make_tuple(rank, N, sign);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;

        std::size_t n = 1;
        for (int i = 0; i < rank; ++i) n *= static_cast<std::size_t>(N);
        fftw_complex* a = fftw_alloc_complex(n);
        fftw_complex* b = fftw_alloc_complex(n);
        int dims[3] = {N, N, N};
        // FFTW_ESTIMATE keeps plan selection deterministic run to run.
        fftw_plan plan =
            fftw_plan_dft(rank, dims, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        cache.emplace(key, plan);
        return plan;
    }
};

/// Complex spectrum of a real scalar field; layout matches the grid
/// (row-major, axis index above N/2 = negative frequency).
struct Spectrum {
    Grid grid;
    std::vector<cplx> a;
    explicit Spectrum(const Grid& g) : grid(g), a(g.size(), cplx(0.0, 0.0)) {}
};

/// d-component spectral vector field.
struct SpectrumVector {
    Grid grid;
    std::array<std::vector<cplx>, 3> comp;
    explicit SpectrumVector(const Grid& g) : grid(g) {
        for (int i = 0; i < g.d; ++i) comp[i].assign(g.size(), cplx(0.0, 0.0));
    }
};

/// Physical samples of the trigonometric polynomial with the given
/// coefficients (exact synthesis; imaginary round-off discarded).
inline void spectrum_to_physical(const Grid& g, const std::vector<cplx>& spec,
                                 std::vector<double>& out, std::vector<cplx>& work) {
    work = spec;
    std::vector<cplx> res(g.size());
    Fft::dft(g.d, g.N, work.data(), res.data(), FFTW_BACKWARD);
    out.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = res[i].real();
}

/// Forward transform with the 1/N^d normalization, so that round-tripping
/// through spectrum_to_physical is the identity.
inline void physical_to_spectrum(const Grid& g, const std::vector<double>& in,
                                 std::vector<cplx>& spec, std::vector<cplx>& work) {
    work.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) work[i] = cplx(in[i], 0.0);
    spec.resize(g.size());
    Fft::dft(g.d, g.N, work.data(), spec.data(), FFTW_FORWARD);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (auto& c : spec) c *= scale;
}

/// Copies the sub-Nyquist band |k_j| <= N/2 - 1 of `src` into a spectrum on
/// `dst_grid` (zero elsewhere). Works for padding and truncation alike;
/// Nyquist planes are always dropped.
inline void respread_spectrum(const Grid& src_grid, const std::vector<cplx>& src,
                              const Grid& dst_grid, std::vector<cplx>& dst) {
    dst.assign(dst_grid.size(), cplx(0.0, 0.0));
    const int kmax = std::min(src_grid.N, dst_grid.N) / 2 - 1;
    std::array<int, 3> sidx{0, 0, 0}, didx{0, 0, 0};
    const int d = src_grid.d;
    std::array<int, 3> k{0, 0, 0};
    const int lo = -kmax, hi = kmax;
    if (d == 2) {
        for (k[0] = lo; k[0] <= hi; ++k[0])
            for (k[1] = lo; k[1] <= hi; ++k[1]) {
                for (int ax = 0; ax < 2; ++ax) {
                    sidx[ax] = wave_to_index(k[ax], src_grid.N);
                    didx[ax] = wave_to_index(k[ax], dst_grid.N);
                }
                dst[flat_index(dst_grid, didx)] = src[flat_index(src_grid, sidx)];
            }
    } else {
        for (k[0] = lo; k[0] <= hi; ++k[0])
            for (k[1] = lo; k[1] <= hi; ++k[1])
                for (k[2] = lo; k[2] <= hi; ++k[2]) {
                    for (int ax = 0; ax < 3; ++ax) {
                        sidx[ax] = wave_to_index(k[ax], src_grid.N);
                        didx[ax] = wave_to_index(k[ax], dst_grid.N);
                    }
                    dst[flat_index(dst_grid, didx)] = src[flat_index(src_grid, sidx)];
                }
    }
}

/// Grid used to evaluate a degree-p polynomial nonlinearity without aliasing:
/// 3N/2 for quadratic terms, 2N for cubic ones.
inline Grid dealias_grid(const Grid& g, int degree) {
    if (degree != 2 && degree != 3) throw std::invalid_argument("dealias degree must be 2 or 3");
    const int Ne = degree == 2 ? (3 * g.N) / 2 : 2 * g.N;
    return Grid(g.d, g.L, Ne % 2 == 0 ? Ne : Ne + 1);
}

}  // namespace actev
