#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "actev/constitutive.hpp"
#include "actev/presets.hpp"
#include "actev/symtensor.hpp"

namespace actev {

/// Random symmetric tensors drawn uniformly in direction (Frobenius unit
/// sphere) and uniformly in magnitude over a stated interval: the sampling
/// measure of every randomized certification below.
struct TensorSampler {
    detail::DetRng rng;
    int d;
    TensorSampler(std::uint64_t seed, int dim) : rng(seed), d(dim) {}

    SymTensor unit_direction() {
        SymTensor t(d);
        // induced metric: off-diagonal entries carry weight sqrt(2)
        double n2 = 0.0;
        for (int i = 0; i < t.ncomp(); ++i) {
            double g = rng.gaussian();
            if (i >= d) g /= std::sqrt(2.0);
            t.c[i] = g;
        }
        n2 = t.dot(t);
        if (n2 == 0.0) {
            t.c[0] = 1.0;
            return t;
        }
        return t * (1.0 / std::sqrt(n2));
    }

    SymTensor in_shell(double lo, double hi) {
        const double mag = lo + (hi - lo) * rng.uniform();
        return unit_direction() * mag;
    }
};

struct CertMetrics {
    std::string law_name;
    double min_monotonicity_gap = 0.0;       // scaled by 1 + |S1| + |S2|
    double max_jacobian_fd_rel_err = 0.0;
    double max_q_identity_dev = 0.0;         // scaled by 1 + |Q|
    double max_gradient_bound_slack = 0.0;   // LHS/RHS - 1 of the weighted bound
    double max_capped_bound_slack = 0.0;     // LHS/(C Q) - 1, regularized only
    long law_agreement_mismatches = -1;      // exact equality count, regularized only
};

/// Monotonicity gap over random pairs; sharp/two-activation pairs live in the
/// admissible ball, uncapped laws sample |D| <= 2M.
inline double certify_monotonicity(const ConstitutiveLaw& law, std::uint64_t seed, long samples,
                                   int d = 3) {
    TensorSampler ts(seed, d);
    const double hi = law.has_strain_cap() ? law.M : 2.0 * law.M;
    double worst = 0.0;
    for (long i = 0; i < samples; ++i) {
        SymTensor d1 = ts.in_shell(0.0, hi);
        SymTensor d2 = ts.in_shell(0.0, hi);
        if (law.has_strain_cap()) {
            // keep strictly inside the ball
            if (d1.norm() >= law.M) d1 *= 0.999999;
            if (d2.norm() >= law.M) d2 *= 0.999999;
        }
        const SymTensor s1 = stress(d1, law), s2 = stress(d2, law);
        const double gap = (s1 - s2).dot(d1 - d2);
        const double scale = 1.0 + s1.norm() + s2.norm();
        worst = std::min(worst, gap / scale);
    }
    return worst;
}

/// Central finite differences of the stress versus the analytic directional
/// derivative on the smooth uncapped region.
inline double certify_jacobian_fd(const ConstitutiveLaw& law, std::uint64_t seed, long samples,
                                  int d = 3, double h = 1e-6) {
    TensorSampler ts(seed, d);
    const double lo = law.m + 1e-3;
    const double hi =
        (law.kind == LawKind::RegularizedEuler ? law.frozen_strain() : law.M) - 1e-3;
    double worst = 0.0;
    for (long i = 0; i < samples; ++i) {
        const SymTensor D = ts.in_shell(lo, hi);
        const SymTensor dD = ts.unit_direction();
        const SymTensor J = stress_jacobian_apply(D, dD, law);
        const SymTensor fd = (1.0 / (2.0 * h)) * (stress(D + h * dD, law) - stress(D - h * dD, law));
        const double rel = (fd - J).norm() / std::max(J.norm(), 1e-300);
        worst = std::max(worst, rel);
    }
    return worst;
}

/// |Q(D, dD) - dS(D)[dD] . dD| over random samples, scaled by 1 + |Q|.
inline double certify_q_identity(const ConstitutiveLaw& law, std::uint64_t seed, long samples,
                                 int d = 3) {
    TensorSampler ts(seed, d);
    const double hi = law.has_strain_cap() ? law.M * (1.0 - 1e-9)
                                           : 2.0 * law.M;
    double worst = 0.0;
    for (long i = 0; i < samples; ++i) {
        const SymTensor D = ts.in_shell(law.flat_threshold() * 1.000001 + 1e-9, hi);
        const SymTensor dD = ts.in_shell(0.0, 2.0);
        const double q = quadratic_form(D, dD, law);
        const double jd = stress_jacobian_apply(D, dD, law).dot(dD);
        worst = std::max(worst, std::abs(q - jd) / (1.0 + std::abs(q)));
    }
    return worst;
}

/// Weighted gradient bound of the singular branch:
///   (M^a - |D|^a)^{1 + 1/a} |dS(D)[dD]|^2 <= sigma max(alpha, beta) Q(D, dD)
/// on m < |D| < M. Returns the worst multiplicative violation (LHS/RHS - 1).
inline double certify_gradient_bound(const ConstitutiveLaw& law, std::uint64_t seed,
                                     long samples, int d = 3) {
    TensorSampler ts(seed, d);
    const StressEval ev(law);
    double worst = -1.0;
    for (long i = 0; i < samples; ++i) {
        const SymTensor D = ts.in_shell(law.m * (1.0 + 1e-12) + 1e-12, law.M * (1.0 - 1e-12));
        const SymTensor dD = ts.in_shell(0.0, 2.0);
        const double s = D.norm();
        if (s <= law.m || s >= law.M) continue;
        const SymTensor J = stress_jacobian_apply(D, dD, law);
        const double q = quadratic_form(D, dD, law);
        const auto [alpha, beta] = alpha_beta(s, law);
        const double weight = std::pow(ev.Ma - ev.pow_a(s), 1.0 + 1.0 / law.a);
        const double lhs = weight * J.dot(J);
        const double rhs = law.sigma * std::max(alpha, beta) * q;
        if (rhs == 0.0) continue;
        worst = std::max(worst, lhs / rhs - 1.0);
    }
    return worst;
}

/// Stress-weighted gradient bound of the regularized law on the near-cap
/// region |D| >= (M + m)/2 with the assembled branch constant.
inline double certify_capped_bound(const ConstitutiveLaw& law, std::uint64_t seed, long samples,
                                   int d = 3) {
    const double C = capped_bound_constant(law);
    TensorSampler ts(seed, d);
    const StressEval ev(law);
    double worst = -1.0;
    for (long i = 0; i < samples; ++i) {
        const SymTensor D = ts.in_shell((law.M + law.m) / 2.0, 2.0 * law.M);
        const SymTensor dD = ts.in_shell(0.0, 2.0);
        const double s = D.norm();
        const SymTensor J = stress_jacobian_apply(D, dD, law);
        const double q = quadratic_form(D, dD, law);
        const double f = ev.magnitude(s);
        const double lhs = J.dot(J) / std::pow(1.0 + f, 1.0 + law.a);
        const double rhs = C * q;
        if (rhs == 0.0) continue;
        worst = std::max(worst, lhs / rhs - 1.0);
    }
    return worst;
}

/// Exact agreement of the sharp and regularized stresses on |D| <= M - 1/n.
inline long certify_law_agreement(const ConstitutiveLaw& reg, std::uint64_t seed, long samples,
                                  int d = 3) {
    ConstitutiveLaw sharp = reg;
    sharp.kind = LawKind::SharpEuler;
    sharp.n = 0;
    TensorSampler ts(seed, d);
    long mismatches = 0;
    for (long i = 0; i < samples; ++i) {
        const SymTensor D = ts.in_shell(0.0, reg.frozen_strain());
        const SymTensor a = stress(D, sharp);
        const SymTensor b = stress(D, reg);
        for (int c = 0; c < a.ncomp(); ++c)
            if (a.c[c] != b.c[c]) {
                ++mismatches;
                break;
            }
    }
    return mismatches;
}

/// Round-trip of the invertible zero-threshold response.
inline double certify_inverse_roundtrip(double M, double a, double sigma, std::uint64_t seed,
                                        long samples, int d = 3) {
    const ConstitutiveLaw law = ConstitutiveLaw::sharp(0.0, M, a, sigma);
    TensorSampler ts(seed, d);
    double worst = 0.0;
    for (long i = 0; i < samples; ++i) {
        const SymTensor S = ts.in_shell(0.0, 1e3);
        const SymTensor D = inverse_stress(S, law);
        const SymTensor S2 = stress(D, law);
        worst = std::max(worst, (S2 - S).norm() / std::max(S.norm(), 1e-300));
    }
    return worst;
}

/// The four canonical laws exercised by the certification suite.
inline std::vector<std::pair<std::string, ConstitutiveLaw>> certification_laws() {
    return {
        {"sharp", ConstitutiveLaw::sharp(1.0, 4.0, 0.25)},
        {"regularized(n=10)", ConstitutiveLaw::regularized(1.0, 4.0, 0.25, 10)},
        {"two-activation", ConstitutiveLaw::two_activation(0.5, 1.0, 4.0, 0.25, 0.5)},
        {"activated-NS(r=3)", ConstitutiveLaw::activated_navier_stokes(1.0, 4.0, 0.25, 0.5, 0.5, 3.0)},
    };
}

/// Full deterministic certification; `samples` scales every sub-check.
inline std::vector<CertMetrics> run_certification(std::uint64_t seed, long samples) {
    std::vector<CertMetrics> out;
    std::uint64_t stream = seed;
    for (const auto& [name, law] : certification_laws()) {
        CertMetrics m;
        m.law_name = name;
        m.min_monotonicity_gap = certify_monotonicity(law, stream++, samples);
        if (law.kind == LawKind::SharpEuler || law.kind == LawKind::RegularizedEuler) {
            m.max_jacobian_fd_rel_err =
                certify_jacobian_fd(law, stream++, std::max(samples / 10, 1L));
            m.max_q_identity_dev = certify_q_identity(law, stream++, samples);
            m.max_gradient_bound_slack =
                certify_gradient_bound(law, stream++, samples);
        }
        if (law.kind == LawKind::RegularizedEuler) {
            m.max_capped_bound_slack = certify_capped_bound(law, stream++, samples);
            m.law_agreement_mismatches = certify_law_agreement(law, stream++, samples);
        }
        out.push_back(m);
    }
    return out;
}

/// Fixed-format report; byte-identical across runs with the same seed.
inline std::string format_certification(const std::vector<CertMetrics>& ms, std::uint64_t seed,
                                        long samples) {
    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "certification seed=%llu samples=%ld\n",
                  static_cast<unsigned long long>(seed), samples);
    s += buf;
    if (samples <= 0) {
        s += "warning: zero samples requested, every check is vacuous\n";
    }
    for (const auto& m : ms) {
        std::snprintf(buf, sizeof(buf), "[%s]\n", m.law_name.c_str());
        s += buf;
        std::snprintf(buf, sizeof(buf), "  min monotonicity gap (scaled) : %.17g\n",
                      m.min_monotonicity_gap);
        s += buf;
        std::snprintf(buf, sizeof(buf), "  max jacobian FD rel err       : %.17g\n",
                      m.max_jacobian_fd_rel_err);
        s += buf;
        std::snprintf(buf, sizeof(buf), "  max Q-identity deviation      : %.17g\n",
                      m.max_q_identity_dev);
        s += buf;
        std::snprintf(buf, sizeof(buf), "  max gradient-bound slack      : %.17g\n",
                      m.max_gradient_bound_slack);
        s += buf;
        if (m.law_agreement_mismatches >= 0) {
            std::snprintf(buf, sizeof(buf), "  max capped-bound slack        : %.17g\n",
                          m.max_capped_bound_slack);
            s += buf;
            std::snprintf(buf, sizeof(buf), "  law agreement mismatches      : %ld\n",
                          m.law_agreement_mismatches);
            s += buf;
        }
    }
    return s;
}

}  // namespace actev
