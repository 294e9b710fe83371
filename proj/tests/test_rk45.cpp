#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "actev/rk45.hpp"

using namespace actev;

namespace {

// y' = A y with A a rotation generator; exact solution is a rotation.
void rotation_rhs(double /*t*/, const std::vector<double>& y, std::vector<double>& dy) {
    dy.resize(2);
    dy[0] = y[1];
    dy[1] = -y[0];
}

double fixed_step_error(double dt) {
    std::vector<double> y = {1.0, 0.0}, ynew, err;
    Dopri5Stepper st(2);
    rotation_rhs(0.0, y, st.k1());
    double t = 0.0;
    const double T = 1.0;
    const long steps = std::lround(T / dt);
    for (long i = 0; i < steps; ++i) {
        st.step(rotation_rhs, t, y, dt, ynew, err);
        y = ynew;
        st.promote_fsal();
        t += dt;
    }
    const double ex = std::cos(t), ey = -std::sin(t);
    return std::hypot(y[0] - ex, y[1] - ey);
}

struct AdaptiveResult {
    double error = 0.0;
    long accepted = 0;
    long rejected = 0;
};

AdaptiveResult integrate_adaptive(double rtol, double atol) {
    std::vector<double> y = {1.0, 0.0}, ynew, err;
    Dopri5Stepper st(2);
    PiController pi;
    rotation_rhs(0.0, y, st.k1());
    double t = 0.0, dt = 1e-3;
    const double T = 10.0;
    AdaptiveResult res;
    while (t < T) {
        dt = std::min(dt, T - t);
        st.step(rotation_rhs, t, y, dt, ynew, err);
        const double en = error_norm(err, y, ynew, rtol, atol);
        if (en > 1.0) {
            dt *= pi.next_factor(en);
            pi.on_reject();
            ++res.rejected;
            continue;
        }
        t += dt;
        y = ynew;
        st.promote_fsal();
        pi.on_accept(en);
        dt *= pi.next_factor(en);
        ++res.accepted;
    }
    res.error = std::hypot(y[0] - std::cos(t), y[1] + std::sin(t));
    return res;
}

}  // namespace

TEST(Dopri5, ObservedOrderAtLeastFour) {
    // Richardson study on the linear test problem
    const double e1 = fixed_step_error(1.0 / 40.0);
    const double e2 = fixed_step_error(1.0 / 80.0);
    const double e3 = fixed_step_error(1.0 / 160.0);
    const double order12 = std::log2(e1 / e2);
    const double order23 = std::log2(e2 / e3);
    EXPECT_GE(order12, 4.0);
    EXPECT_GE(order23, 4.0);
    EXPECT_LT(e3, 1e-10);
}

TEST(Dopri5, EmbeddedErrorTracksTrueError) {
    std::vector<double> y = {1.0, 0.0}, ynew, err;
    Dopri5Stepper st(2);
    rotation_rhs(0.0, y, st.k1());
    const double dt = 0.05;
    st.step(rotation_rhs, 0.0, y, dt, ynew, err);
    const double true_err = std::hypot(ynew[0] - std::cos(dt), ynew[1] + std::sin(dt));
    const double est = std::hypot(err[0], err[1]);
    EXPECT_GT(est, 0.0);
    // same magnitude within two orders
    EXPECT_LT(true_err, 100.0 * est);
    EXPECT_LT(est, 100.0 * std::max(true_err, 1e-16));
}

TEST(PiControl, ToleranceScalesTheGlobalError) {
    const AdaptiveResult loose = integrate_adaptive(1e-5, 1e-12);
    const AdaptiveResult tight = integrate_adaptive(1e-9, 1e-14);
    EXPECT_LT(tight.error, loose.error);
    EXPECT_GT(tight.accepted, loose.accepted);
    EXPECT_LT(loose.error, 1e-3);
    EXPECT_LT(tight.error, 1e-6);
    // rejections stay rare on a smooth problem
    EXPECT_LT(loose.rejected, loose.accepted / 2 + 10);
}
