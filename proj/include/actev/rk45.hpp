#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace actev {

/// Dormand-Prince 5(4) embedded pair. The seven-stage tableau is FSAL: the
/// last stage of an accepted step is the first stage of the next.
struct Dopri5 {
    static constexpr int stages = 7;
    static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a2[1] = {1.0 / 5};
    static constexpr double a3[2] = {3.0 / 40, 9.0 / 40};
    static constexpr double a4[3] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
    static constexpr double a5[4] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                                     -212.0 / 729};
    static constexpr double a6[5] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                     -5103.0 / 18656};
    static constexpr double b[7] = {35.0 / 384,     0.0, 500.0 / 1113, 125.0 / 192,
                                    -2187.0 / 6784, 11.0 / 84, 0.0};
    // b - bhat, the weights of the embedded 4th-order error estimate
    static constexpr double e[7] = {71.0 / 57600,    0.0,          -71.0 / 16695, 71.0 / 1920,
                                    -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
};

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;

/// Workspace for repeated Dormand-Prince steps on a fixed-size state.
class Dopri5Stepper {
  public:
    explicit Dopri5Stepper(std::size_t dim) : dim_(dim) {
        for (auto& k : k_) k.assign(dim, 0.0);
        ytmp_.assign(dim, 0.0);
    }

    /// One step from (t, y) with size dt. On entry k1 must hold f(t, y)
    /// (call rhs yourself or reuse the previous step's last stage).
    /// Outputs the 5th-order solution, the error vector, and f(t+dt, ynew)
    /// in k(6) for FSAL reuse.
    void step(const OdeRhs& rhs, double t, const std::vector<double>& y, double dt,
              std::vector<double>& ynew, std::vector<double>& err) {
        using T = Dopri5;
        auto stage = [&](int s, const double* a) {
            for (std::size_t i = 0; i < dim_; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s - 1; ++j) acc += a[j] * k_[j][i];
                ytmp_[i] = y[i] + dt * acc;
            }
            rhs(t + T::c[s - 1] * dt, ytmp_, k_[s - 1]);
        };
        stage(2, T::a2);
        stage(3, T::a3);
        stage(4, T::a4);
        stage(5, T::a5);
        stage(6, T::a6);
        ynew.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 6; ++j) acc += T::b[j] * k_[j][i];
            ynew[i] = y[i] + dt * acc;
        }
        rhs(t + dt, ynew, k_[6]);  // FSAL stage
        err.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 7; ++j) acc += T::e[j] * k_[j][i];
            err[i] = dt * acc;
        }
    }

    std::vector<double>& k1() { return k_[0]; }
    const std::vector<double>& k_last() const { return k_[6]; }
    void promote_fsal() { std::swap(k_[0], k_[6]); }

  private:
    std::size_t dim_;
    std::array<std::vector<double>, 7> k_;
    std::vector<double> ytmp_;
};

/// Scaled RMS error norm: err_i / (atol + rtol * max(|y_i|, |ynew_i|)).
inline double error_norm(const std::vector<double>& err, const std::vector<double>& y,
                         const std::vector<double>& ynew, double rtol, double atol) {
    double s = 0.0;
    const std::size_t n = err.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double q = err[i] / sc;
        s += q * q;
    }
    return std::sqrt(s / std::max<std::size_t>(n, 1));
}

/// Standard PI step-size controller for a 5(4) pair.
struct PiController {
    double safety = 0.9;
    double fac_min = 0.2;
    double fac_max = 5.0;
    double alpha = 0.17;  // ~ 1/5 - 0.75 beta
    double beta = 0.04;
    double err_prev = 1.0;
    bool last_rejected = false;

    double next_factor(double errnorm) {
        const double en = std::max(errnorm, 1e-16);
        double fac = safety * std::pow(en, -alpha) * std::pow(err_prev, beta);
        const double cap = last_rejected ? 1.0 : fac_max;
        fac = std::clamp(fac, fac_min, cap);
        return fac;
    }
    void on_accept(double errnorm) {
        err_prev = std::max(errnorm, 1e-16);
        last_rejected = false;
    }
    void on_reject() { last_rejected = true; }
};

}  // namespace actev
