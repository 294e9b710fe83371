#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "actev/certify.hpp"
#include "actev/constitutive.hpp"

using namespace actev;

namespace {

// Frozen high-precision reference values for the canonical parameter set
// m = 1, M = 4, a = 1/4 (independent 40-digit evaluation of the closed forms
// and of the adaptive quadrature defining the potential).
constexpr double kSStar145 = 2482.7166018433933902;       // |S|((m+M)/2)
constexpr double kF10At395 = 465363562.32672274073;       // frozen-branch magnitude, n = 10
constexpr double kAlpha25 = 0.09406807961409578429;
constexpr double kBeta25 = 1.0053082701140166698;
constexpr double kPotential10At25 = 657.80366830343854943;
constexpr double kPotential10At42 = 159059395.96911128245;  // crosses the frozen strain

ConstitutiveLaw canonical_sharp() { return ConstitutiveLaw::sharp(1.0, 4.0, 0.25); }
ConstitutiveLaw canonical_reg(int n = 10) { return ConstitutiveLaw::regularized(1.0, 4.0, 0.25, n); }

SymTensor diag_tensor(int d, double x, double y, double z = 0.0) {
    SymTensor t(d);
    t.set(0, 0, x);
    t.set(1, 1, y);
    if (d == 3) t.set(2, 2, z);
    return t;
}

// Full-matrix conjugation R D R^T for the isotropy test.
SymTensor rotate(const SymTensor& D, const std::array<std::array<double, 3>, 3>& R) {
    const int d = D.d;
    double full[3][3] = {};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) full[i][j] = D(i, j);
    double tmp[3][3] = {};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) tmp[i][j] += R[i][k] * full[k][j];
    SymTensor out(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += tmp[i][k] * R[j][k];
            out.set(i, j, s);
        }
    return out;
}

std::array<std::array<double, 3>, 3> rotation3(double angle, int axis) {
    std::array<std::array<double, 3>, 3> R{};
    const double c = std::cos(angle), s = std::sin(angle);
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    R[axis][axis] = 1.0;
    R[i][i] = c;
    R[i][j] = -s;
    R[j][i] = s;
    R[j][j] = c;
    return R;
}

}  // namespace

TEST(ConstitutiveLawValidation, RejectsParameterViolations) {
    auto bad_gap = ConstitutiveLaw::sharp(2.5, 4.0, 0.25);  // m >= M - 2
    EXPECT_THROW(
        {
            try {
                bad_gap.validate();
            } catch (const ConfigError& e) {
                EXPECT_NE(std::string(e.what()).find("M - 2"), std::string::npos);
                throw;
            }
        },
        ConfigError);

    EXPECT_THROW(ConstitutiveLaw::sharp(1.0, 4.0, 0.6).validate(), ConfigError);
    EXPECT_THROW(ConstitutiveLaw::sharp(-1.0, 4.0, 0.25).validate(), ConfigError);
    EXPECT_THROW(ConstitutiveLaw::regularized(1.0, 4.0, 0.25, 0).validate(), ConfigError);
    EXPECT_THROW(ConstitutiveLaw::two_activation(1.5, 1.0, 4.0, 0.25, 0.5).validate(),
                 ConfigError);
    EXPECT_THROW(
        ConstitutiveLaw::activated_navier_stokes(1.0, 4.0, 0.25, 0.5, 0.5, 1.5).validate(),
        ConfigError);
    EXPECT_NO_THROW(canonical_sharp().validate());
    EXPECT_NO_THROW(canonical_reg().validate());
}

TEST(Stress, ZeroBelowActivation) {
    const auto law = canonical_sharp();
    for (double mag : {0.5, 1.0}) {
        TensorSampler ts(7, 3);
        const SymTensor D = ts.unit_direction() * mag;
        const SymTensor S = stress(D, law);
        EXPECT_EQ(S.norm(), 0.0);
    }
    EXPECT_EQ(stress(SymTensor::zero(3), law).norm(), 0.0);
}

TEST(Stress, MidpointMagnitudeEqualsSStar) {
    const auto law = canonical_sharp();
    TensorSampler ts(11, 3);
    const SymTensor E = ts.unit_direction();
    const SymTensor S = stress(2.5 * E, law);
    EXPECT_NEAR(S.norm() / kSStar145, 1.0, 1e-13);
    EXPECT_NEAR(S.norm() / s_star(law), 1.0, 1e-14);
    // direction is exactly E
    const SymTensor dir = (1.0 / S.norm()) * S;
    EXPECT_LT((dir - E).norm(), 1e-14);
}

TEST(Stress, SharpLawRejectsStatesOutsideTheBall) {
    const auto law = canonical_sharp();
    TensorSampler ts(3, 3);
    EXPECT_THROW(stress(ts.unit_direction() * 4.2, law), DomainViolation);
    EXPECT_THROW(stress_magnitude(4.0, law), DomainViolation);
    EXPECT_THROW(stress_magnitude(5.0, law), DomainViolation);
    EXPECT_NO_THROW(stress(ts.unit_direction() * 4.2, canonical_reg()));
}

TEST(StressMagnitude, FrozenBranchValue) {
    const auto law = canonical_reg(10);
    EXPECT_EQ(stress_magnitude(law.m, law), 0.0);
    EXPECT_EQ(stress_magnitude(0.0, law), 0.0);
    EXPECT_NEAR(stress_magnitude(3.95, law) / kF10At395, 1.0, 1e-13);
    EXPECT_THROW(stress_magnitude(-0.1, law), std::invalid_argument);
}

TEST(StressMagnitude, NondecreasingInS) {
    for (const auto& [name, law] : certification_laws()) {
        const double hi = law.has_strain_cap() ? law.M * (1.0 - 1e-6) : 2.0 * law.M;
        double prev = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double s = hi * i / 2000.0;
            const double f = stress_magnitude(s, law);
            EXPECT_GE(f, prev) << name << " at s = " << s;
            prev = f;
        }
    }
}

TEST(StressMagnitude, LawsAgreeBelowFrozenStrain) {
    EXPECT_EQ(certify_law_agreement(canonical_reg(10), 17, 100000), 0);
    EXPECT_EQ(certify_law_agreement(canonical_reg(3), 18, 10000), 0);
}

TEST(SStar, DefinitionalIdentityAndPositivity) {
    for (int n : {2, 5, 50}) {
        const auto law = canonical_reg(n);
        // any frozen strain beyond the midpoint leaves s_star untouched
        EXPECT_NEAR(s_star(law) / stress_magnitude((law.m + law.M) / 2.0, law), 1.0, 1e-14);
        EXPECT_GT(s_star(law), 0.0);
    }
    const auto scaled = ConstitutiveLaw::sharp(1.0, 4.0, 0.25, 2.5);
    EXPECT_NEAR(s_star(scaled) / stress_magnitude(2.5, scaled), 1.0, 1e-14);
}

TEST(Potential, VanishesBelowActivationAndMatchesQuadrature) {
    const auto law = canonical_reg(10);
    EXPECT_EQ(potential(0.9 * law.m, law), 0.0);
    EXPECT_NEAR(potential(2.5, law) / kPotential10At25, 1.0, 1e-12);
    EXPECT_NEAR(potential(4.2, law) / kPotential10At42, 1.0, 1e-12);
    EXPECT_GE(potential(3.0, law), potential(2.5, law));
    EXPECT_THROW(potential(1.0, canonical_sharp()), std::invalid_argument);
}

TEST(Potential, DerivativeRecoversTheMagnitude) {
    const auto law = canonical_reg(10);
    const double h = 1e-6;
    for (double s : {1.5, 2.5, 3.5}) {
        const double fd = (potential(s + h, law) - potential(s - h, law)) / (2.0 * h);
        EXPECT_NEAR(fd / stress_magnitude(s, law), 1.0, 1e-6) << "s = " << s;
    }
}

TEST(Jacobian, OrthogonalDirectionScalesByMagnitudeOverS) {
    const auto law = canonical_sharp();
    const double s = 2.2;
    SymTensor D = diag_tensor(3, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
    D *= s;
    SymTensor dD(3);
    dD.set(0, 2, 1.0);  // D . dD = 0
    ASSERT_EQ(D.dot(dD), 0.0);
    const SymTensor J = stress_jacobian_apply(D, dD, law);
    const double f = stress_magnitude(s, law);
    EXPECT_LT((J - (f / s) * dD).norm(), 1e-12 * (f / s));
}

TEST(Jacobian, CollinearDirectionStaysCollinear) {
    const auto law = canonical_sharp();
    TensorSampler ts(23, 3);
    const SymTensor D = ts.in_shell(1.5, 3.5);
    const SymTensor J = stress_jacobian_apply(D, D, law);
    const double s = D.norm();
    const SymTensor residual = J - (J.dot(D) / (s * s)) * D;
    EXPECT_LT(residual.norm(), 1e-12 * J.norm());
}

TEST(Jacobian, MatchesCentralFiniteDifferences) {
    EXPECT_LT(certify_jacobian_fd(canonical_sharp(), 31, 2000), 1e-6);
    EXPECT_LT(certify_jacobian_fd(canonical_reg(10), 32, 2000), 1e-6);
    EXPECT_LT(certify_jacobian_fd(canonical_sharp(), 33, 500, 2), 1e-6);  // d = 2
}

TEST(Jacobian, FrozenBranchMatchesFiniteDifferences) {
    // sample strictly inside the frozen region, away from the kink
    const auto law = canonical_reg(10);
    TensorSampler ts(41, 3);
    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const SymTensor D = ts.in_shell(law.frozen_strain() + 1e-3, 2.0 * law.M);
        const SymTensor dD = ts.unit_direction();
        const SymTensor J = stress_jacobian_apply(D, dD, law);
        const SymTensor fd =
            (1.0 / (2.0 * h)) * (stress(D + h * dD, law) - stress(D - h * dD, law));
        worst = std::max(worst, (fd - J).norm() / J.norm());
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Jacobian, RejectsTheFlatBranch) {
    const auto law = canonical_sharp();
    TensorSampler ts(5, 3);
    EXPECT_THROW(stress_jacobian_apply(ts.unit_direction() * 0.5, ts.unit_direction(), law),
                 std::invalid_argument);
}

TEST(QuadraticForm, ZeroCases) {
    const auto law = canonical_sharp();
    TensorSampler ts(6, 3);
    const SymTensor D = ts.in_shell(1.5, 3.5);
    EXPECT_EQ(quadratic_form(D, SymTensor::zero(3), law), 0.0);
    EXPECT_EQ(quadratic_form(ts.unit_direction() * 0.5, ts.unit_direction(), law), 0.0);
}

TEST(QuadraticForm, OrthogonalBranchClosedForm) {
    const auto law = canonical_sharp();
    const double s = 2.7;
    SymTensor D = diag_tensor(3, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
    D *= s;
    SymTensor dD(3);
    dD.set(1, 2, 0.8);
    ASSERT_EQ(D.dot(dD), 0.0);
    const double q = quadratic_form(D, dD, law);
    const double expected =
        (s - law.m) * dD.dot(dD) /
        (std::pow(std::pow(law.M, law.a) - std::pow(s, law.a), 1.0 / law.a) * s);
    EXPECT_NEAR(q / expected, 1.0, 1e-13);
}

TEST(QuadraticForm, IdentityAgainstJacobianContraction) {
    EXPECT_LE(certify_q_identity(canonical_sharp(), 51, 10000), 1e-12);
    EXPECT_LE(certify_q_identity(canonical_reg(10), 52, 10000), 1e-12);
    EXPECT_LE(certify_q_identity(
                  ConstitutiveLaw::two_activation(0.5, 1.0, 4.0, 0.25, 0.5), 53, 5000),
              1e-12);
}

TEST(AlphaBeta, VanishesAtBothEndpointsAndMatchesClosedForm) {
    const auto law = canonical_sharp();
    EXPECT_LT(alpha_beta(law.m + 1e-9, law).first, 1e-8);
    EXPECT_LT(alpha_beta(law.M - 1e-9, law).first, 1e-8);
    const auto [alpha, beta] = alpha_beta(2.5, law);
    EXPECT_NEAR(alpha / kAlpha25, 1.0, 1e-13);
    EXPECT_NEAR(beta / kBeta25, 1.0, 1e-13);
    EXPECT_GT(alpha, 0.0);
    EXPECT_GT(beta, 0.0);
    EXPECT_THROW(alpha_beta(0.5, law), std::invalid_argument);
    EXPECT_THROW(alpha_beta(4.5, law), std::invalid_argument);
}

TEST(Monotonicity, TrivialAndCollinearReductions) {
    const auto law = canonical_sharp();
    TensorSampler ts(61, 3);
    const SymTensor D = ts.in_shell(0.0, 3.9);
    EXPECT_EQ(monotonicity_gap(D, D, law), 0.0);

    const SymTensor E = ts.unit_direction();
    for (int i = 0; i < 200; ++i) {
        const double t = 3.99 * ts.rng.uniform(), s = 3.99 * ts.rng.uniform();
        const double gap = monotonicity_gap(t * E, s * E, law);
        const double scalar = (stress_magnitude(t, law) - stress_magnitude(s, law)) * (t - s);
        EXPECT_NEAR(gap, scalar, 1e-9 * (1.0 + std::abs(scalar)));
        EXPECT_GE(gap, -1e-12 * (1.0 + std::abs(scalar)));
    }
}

TEST(Monotonicity, RandomizedCertification) {
    for (const auto& [name, law] : certification_laws()) {
        const double worst = certify_monotonicity(law, 71, 100000);
        EXPECT_GE(worst, -1e-10) << name;
    }
}

TEST(InverseStress, FixesOriginAndStaysBounded) {
    const auto law = ConstitutiveLaw::sharp(0.0, 4.0, 0.25);
    EXPECT_EQ(inverse_stress(SymTensor::zero(3), law).norm(), 0.0);
    TensorSampler ts(81, 3);
    const SymTensor S = ts.unit_direction() * 1e9;
    EXPECT_LT(inverse_stress(S, law).norm(), law.M);
    EXPECT_THROW(inverse_stress(S, canonical_sharp()), std::invalid_argument);
}

TEST(InverseStress, RoundTrip) {
    EXPECT_LT(certify_inverse_roundtrip(4.0, 0.25, 1.0, 91, 1000), 1e-10);
    EXPECT_LT(certify_inverse_roundtrip(4.0, 0.25, 2.5, 92, 1000), 1e-10);
    EXPECT_LT(certify_inverse_roundtrip(6.0, 0.4, 1.0, 93, 1000), 1e-10);
}

TEST(RadialStructure, StressIsCollinearAndIsotropic) {
    const auto law = canonical_sharp();
    TensorSampler ts(101, 3);
    for (int i = 0; i < 100; ++i) {
        const SymTensor D = ts.in_shell(0.1, 3.9);
        const SymTensor S = stress(D, law);
        // collinearity
        const double s = D.norm();
        EXPECT_LT((S - (S.dot(D) / (s * s)) * D).norm(), 1e-12 * (1.0 + S.norm()));
        // isotropy under rotations
        const auto R = rotation3(ts.rng.uniform() * 6.28, i % 3);
        const SymTensor lhs = stress(rotate(D, R), law);
        const SymTensor rhs = rotate(S, R);
        EXPECT_LT((lhs - rhs).norm(), 1e-10 * (1.0 + rhs.norm()));
    }
}

TEST(GradientBounds, WeightedBoundWithAlphaBeta) {
    EXPECT_LE(certify_gradient_bound(canonical_sharp(), 111, 20000), 1e-9);
    const auto scaled = ConstitutiveLaw::sharp(1.0, 4.0, 0.25, 3.0);
    EXPECT_LE(certify_gradient_bound(scaled, 112, 5000), 1e-9);
}

TEST(GradientBounds, StressWeightedBoundWithAssembledConstant) {
    EXPECT_LE(certify_capped_bound(canonical_reg(10), 121, 20000), 1e-9);
    EXPECT_LE(certify_capped_bound(canonical_reg(2), 122, 5000), 1e-9);
    EXPECT_LE(certify_capped_bound(canonical_reg(1000), 123, 5000), 1e-9);
}

TEST(TwoActivation, BranchStructure) {
    const auto law = ConstitutiveLaw::two_activation(0.5, 1.0, 4.0, 0.25, 0.7);
    EXPECT_EQ(stress_magnitude(0.4, law), 0.0);
    EXPECT_EQ(stress_magnitude(0.5, law), 0.0);
    // linear branch 2 nu (s - m_lower)
    EXPECT_NEAR(stress_magnitude(0.8, law), 2.0 * 0.7 * 0.3, 1e-14);
    // continuity at the upper activation
    EXPECT_NEAR(stress_magnitude(1.0 + 1e-12, law), stress_magnitude(1.0, law), 1e-8);
    // singular part added above m
    EXPECT_GT(stress_magnitude(2.0, law), 2.0 * 0.7 * 1.5);
}

TEST(ActivatedNavierStokes, NewtonianBelowActivation) {
    const auto law = ConstitutiveLaw::activated_navier_stokes(1.0, 4.0, 0.25, 0.3, 0.4, 2.5);
    TensorSampler ts(131, 3);
    const SymTensor D = ts.in_shell(0.2, 0.9);
    const SymTensor S = stress(D, law);
    EXPECT_LT((S - (2.0 * 0.3) * D).norm(), 1e-14);
    // augmentation strictly above
    const double s = 2.0;
    EXPECT_NEAR(stress_magnitude(s, law),
                2.0 * 0.3 * s + 2.0 * 0.4 * (s - 1.0) * std::pow(s, 0.5), 1e-12);
}
