#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "actev/errors.hpp"
#include "actev/symtensor.hpp"

namespace actev {

enum class LawKind {
    SharpEuler,             // inviscid below m, dissipative with strain cap M
    RegularizedEuler,       // same but with the singular denominator frozen above M - 1/n
    TwoActivation,          // inviscid below m_lower, linear up to m, singular up to M
    ActivatedNavierStokes,  // Newtonian below m, shear-thickening augmentation above
};

/// Parameter record selecting one member of the activated constitutive family.
///
/// Every law is a radial map S(D) = f(|D|) D/|D| with a nondecreasing
/// magnitude function f; the kinds differ only in f.
struct ConstitutiveLaw {
    LawKind kind = LawKind::SharpEuler;
    double m = 1.0;        // activation threshold (strain-rate units)
    double M = 4.0;        // strain cap at which the singular branch blows up
    double a = 0.25;       // singular-branch exponent, 0 < a < 1/2
    double sigma = 1.0;    // stress scale of the singular branch
    double nu = 0.0;       // viscosity (TwoActivation / ActivatedNavierStokes)
    double m_lower = 0.0;  // lower activation (TwoActivation)
    double nu_tilde = 0.0; // secondary viscosity (ActivatedNavierStokes)
    double r = 0.0;        // power-law exponent > 2 (ActivatedNavierStokes)
    int n = 0;             // regularization / Galerkin index (RegularizedEuler)

    static ConstitutiveLaw sharp(double m, double M, double a, double sigma = 1.0) {
        ConstitutiveLaw law;
        law.kind = LawKind::SharpEuler;
        law.m = m; law.M = M; law.a = a; law.sigma = sigma;
        return law;
    }
    static ConstitutiveLaw regularized(double m, double M, double a, int n, double sigma = 1.0) {
        ConstitutiveLaw law;
        law.kind = LawKind::RegularizedEuler;
        law.m = m; law.M = M; law.a = a; law.sigma = sigma; law.n = n;
        return law;
    }
    static ConstitutiveLaw two_activation(double m_lower, double m, double M, double a, double nu,
                                          double sigma = 1.0) {
        ConstitutiveLaw law;
        law.kind = LawKind::TwoActivation;
        law.m = m; law.M = M; law.a = a; law.sigma = sigma;
        law.nu = nu; law.m_lower = m_lower;
        return law;
    }
    static ConstitutiveLaw activated_navier_stokes(double m, double M, double a, double nu,
                                                   double nu_tilde, double r, double sigma = 1.0) {
        ConstitutiveLaw law;
        law.kind = LawKind::ActivatedNavierStokes;
        law.m = m; law.M = M; law.a = a; law.sigma = sigma;
        law.nu = nu; law.nu_tilde = nu_tilde; law.r = r;
        return law;
    }

    /// Checks the admissible parameter ranges; throws ConfigError naming the
    /// violated constraint. `allow_zero_m` relaxes m > 0 for the invertible
    /// zero-threshold response used by inverse_stress.
    void validate(bool allow_zero_m = false) const {
        const double m_floor = allow_zero_m ? -1.0 : 0.0;
        if (!(m > m_floor)) throw ConfigError("constitutive law violates 0 < m");
        if (!(m < M - 2.0)) throw ConfigError("constitutive law violates 0 < m < M - 2 < inf");
        if (!(a > 0.0 && a < 0.5)) throw ConfigError("constitutive law violates 0 < a < 1/2");
        if (!(sigma > 0.0)) throw ConfigError("constitutive law requires sigma > 0");
        switch (kind) {
            case LawKind::SharpEuler:
                break;
            case LawKind::RegularizedEuler:
                if (n < 1) throw ConfigError("regularized law requires n >= 1");
                if (!(M - 1.0 / n > m)) throw ConfigError("regularized law requires M - 1/n > m");
                break;
            case LawKind::TwoActivation:
                if (!(m_lower > 0.0 && m_lower < m))
                    throw ConfigError("two-activation law requires 0 < m_lower < m < M");
                if (!(nu > 0.0)) throw ConfigError("two-activation law requires nu > 0");
                break;
            case LawKind::ActivatedNavierStokes:
                if (!(nu > 0.0)) throw ConfigError("activated Navier-Stokes law requires nu > 0");
                if (!(nu_tilde > 0.0))
                    throw ConfigError("activated Navier-Stokes law requires nu_tilde > 0");
                if (!(r > 2.0)) throw ConfigError("activated Navier-Stokes law requires r > 2");
                break;
        }
    }

    /// Largest strain rate at which the stress is still identically zero.
    double flat_threshold() const {
        if (kind == LawKind::TwoActivation) return m_lower;
        if (kind == LawKind::ActivatedNavierStokes) return 0.0;
        return m;
    }

    /// True when |D| must stay strictly below M.
    bool has_strain_cap() const {
        return kind == LawKind::SharpEuler || kind == LawKind::TwoActivation;
    }

    /// Strain level above which the regularized denominator is frozen.
    double frozen_strain() const {
        return kind == LawKind::RegularizedEuler ? M - 1.0 / n
                                                 : std::numeric_limits<double>::infinity();
    }
};

/// c_{n,M,a} = M^a - (M - 1/n)^a, the frozen-denominator constant.
inline double cap_constant(const ConstitutiveLaw& law) {
    return std::pow(law.M, law.a) - std::pow(law.M - 1.0 / law.n, law.a);
}

/// Precomputed pointwise evaluator for the magnitude function f and its
/// derivative. The a = 1/4 case is special-cased (sqrt/square chains) because
/// it dominates the solver's inner loop.
struct StressEval {
    LawKind kind;
    double m, M, a, inv_a, sigma;
    double Ma;             // M^a
    double frozen;         // M - 1/n (RegularizedEuler), +inf otherwise
    double nu2;            // 2 nu
    double m_lower;
    double nu_tilde2;      // 2 nu_tilde
    double r;
    double flat;           // flat_threshold()
    bool quarter;          // a == 0.25 fast path

    explicit StressEval(const ConstitutiveLaw& law)
        : kind(law.kind),
          m(law.m),
          M(law.M),
          a(law.a),
          inv_a(1.0 / law.a),
          sigma(law.sigma),
          frozen(law.frozen_strain()),
          nu2(2.0 * law.nu),
          m_lower(law.m_lower),
          nu_tilde2(2.0 * law.nu_tilde),
          r(law.r),
          flat(law.flat_threshold()),
          quarter(law.a == 0.25) {
        Ma = pow_a(M);
    }

    double pow_a(double x) const {
        return quarter ? std::sqrt(std::sqrt(x)) : std::pow(x, a);
    }
    double pow_inv_a(double x) const {
        if (quarter) {
            const double y = x * x;
            return y * y;
        }
        return std::pow(x, inv_a);
    }

    /// Singular Euler-family branch, sigma (s - m)_+ / (M^a - s_eff^a)^{1/a}.
    /// The caller guarantees s_eff yields a positive denominator.
    double euler_branch(double s, double s_eff) const {
        if (s <= m) return 0.0;
        return sigma * (s - m) / pow_inv_a(Ma - pow_a(s_eff));
    }

    /// f(s). No domain check: for capped laws at s >= M the result is
    /// meaningless (callers reject such states before use).
    double magnitude(double s) const {
        switch (kind) {
            case LawKind::SharpEuler:
                return euler_branch(s, s);
            case LawKind::RegularizedEuler:
                return euler_branch(s, std::min(s, frozen));
            case LawKind::TwoActivation: {
                if (s <= m_lower) return 0.0;
                const double linear = nu2 * (s - m_lower);
                return s <= m ? linear : linear + euler_branch(s, s);
            }
            case LawKind::ActivatedNavierStokes: {
                const double newtonian = nu2 * s;
                if (s <= m) return newtonian;
                return newtonian + nu_tilde2 * (s - m) * std::pow(s, r - 2.0);
            }
        }
        return 0.0;
    }

    /// f'(s) on the differentiable region s > flat_threshold().
    /// Convention: at and above the frozen strain the frozen branch applies.
    double derivative(double s) const {
        switch (kind) {
            case LawKind::SharpEuler:
                return euler_branch_derivative(s);
            case LawKind::RegularizedEuler:
                if (s >= frozen) return sigma / pow_inv_a(Ma - pow_a(frozen));
                return euler_branch_derivative(s);
            case LawKind::TwoActivation:
                if (s <= m) return nu2;
                return nu2 + euler_branch_derivative(s);
            case LawKind::ActivatedNavierStokes: {
                if (s <= m) return nu2;
                const double p = std::pow(s, r - 3.0);
                return nu2 + nu_tilde2 * ((r - 2.0) * (s - m) * p + p * s);
            }
        }
        return 0.0;
    }

  private:
    double euler_branch_derivative(double s) const {
        const double den = Ma - pow_a(s);
        const double den_inv_a = pow_inv_a(den);
        // d/ds [ (s-m) den^{-1/a} ] = den^{-1/a} + (s-m) s^{a-1} den^{-1/a-1}
        return sigma * (1.0 / den_inv_a + (s - m) * pow_a(s) / (s * den_inv_a * den));
    }
};

/// |S| = f(|D|) as a scalar function of the strain-rate magnitude.
inline double stress_magnitude(double s, const ConstitutiveLaw& law) {
    if (!(s >= 0.0)) throw std::invalid_argument("stress_magnitude: s must be >= 0");
    if (law.has_strain_cap() && s >= law.M)
        throw DomainViolation("stress_magnitude: |D| = " + std::to_string(s) +
                              " outside the admissible set |D| < M = " + std::to_string(law.M));
    return StressEval(law).magnitude(s);
}

/// Full tensor stress S(D) = f(|D|) D/|D|; D = 0 maps to the zero tensor.
inline SymTensor stress(const SymTensor& D, const ConstitutiveLaw& law) {
    const double s = D.norm();
    if (law.has_strain_cap() && s >= law.M)
        throw DomainViolation("stress: |D| = " + std::to_string(s) +
                              " outside the admissible set |D| < M = " + std::to_string(law.M));
    SymTensor S = SymTensor::zero(D.d);
    if (s <= law.flat_threshold() || s == 0.0) return S;
    const double f = StressEval(law).magnitude(s);
    S = (f / s) * D;
    return S;
}

/// Magnitude of the regularized stress at the midpoint strain (m + M)/2,
/// the uniform bound separating the moderate and near-cap stress regimes.
inline double s_star(const ConstitutiveLaw& law) {
    const StressEval ev(law);
    const double mid = (law.M + law.m) / 2.0;
    return law.sigma * ((law.M - law.m) / 2.0) / ev.pow_inv_a(ev.Ma - ev.pow_a(mid));
}

/// Directional derivative dS(D)[dD] of the radial map, valid strictly above
/// the flat threshold. Both terms come from differentiating f(|D|) D/|D|:
///   dS[dD] = (f/s) dD + (f' - f/s) s^{-2} (D . dD) D,   s = |D|.
inline SymTensor stress_jacobian_apply(const SymTensor& D, const SymTensor& dD,
                                       const ConstitutiveLaw& law) {
    const double s = D.norm();
    if (s <= law.flat_threshold())
        throw std::invalid_argument(
            "stress_jacobian_apply: |D| lies in the non-differentiable/zero branch");
    if (law.has_strain_cap() && s >= law.M)
        throw DomainViolation("stress_jacobian_apply: |D| outside the admissible set");
    const StressEval ev(law);
    const double f = ev.magnitude(s);
    const double fp = ev.derivative(s);
    const double radial = (fp - f / s) / (s * s);
    return (f / s) * dD + (radial * D.dot(dD)) * D;
}

/// Q(D, dD) = dS(D)[dD] . dD, the nonnegative quadratic form of the law.
/// Returns 0 on the flat branch by convention.
inline double quadratic_form(const SymTensor& D, const SymTensor& dD,
                             const ConstitutiveLaw& law) {
    const double s = D.norm();
    if (s <= law.flat_threshold()) return 0.0;
    if (law.has_strain_cap() && s >= law.M)
        throw DomainViolation("quadratic_form: |D| outside the admissible set");
    const StressEval ev(law);
    const double f = ev.magnitude(s);
    const double fp = ev.derivative(s);
    const double ddot = D.dot(dD);
    return (f / s) * dD.dot(dD) + (fp - f / s) / (s * s) * ddot * ddot;
}

/// The coefficient pair weighting the two parts of the quadratic form in the
/// gradient bound: alpha = (s - m)(M^a - s^a)/s and
/// beta = (2(s - m)(M^a - s^a) + (s - m) s^a + m (M^a - s^a))/s, on m < s < M.
inline std::pair<double, double> alpha_beta(double s, const ConstitutiveLaw& law) {
    if (!(s > law.m && s < law.M))
        throw std::invalid_argument("alpha_beta: s must lie in (m, M)");
    const StressEval ev(law);
    const double den = ev.Ma - ev.pow_a(s);
    const double sa = ev.pow_a(s);
    const double alpha = (s - law.m) * den / s;
    const double beta = (2.0 * (s - law.m) * den + (s - law.m) * sa + law.m * den) / s;
    return {alpha, beta};
}

/// (S(D1) - S(D2)) . (D1 - D2); nonnegative for every law of the family.
inline double monotonicity_gap(const SymTensor& D1, const SymTensor& D2,
                               const ConstitutiveLaw& law) {
    return (stress(D1, law) - stress(D2, law)).dot(D1 - D2);
}

/// Inverse response of the zero-threshold sharp law:
/// D = M S / (sigma^a + |S|^a)^{1/a}.
inline SymTensor inverse_stress(const SymTensor& S, const ConstitutiveLaw& law) {
    if (law.kind != LawKind::SharpEuler || law.m != 0.0)
        throw std::invalid_argument(
            "inverse_stress: only the sharp law with m = 0 is invertible");
    const StressEval ev(law);
    const double mag = S.norm();
    if (mag == 0.0) return SymTensor::zero(S.d);
    const double den = ev.pow_inv_a(ev.pow_a(law.sigma) + ev.pow_a(mag));
    return (law.M / den) * S;
}

/// Dissipation potential of the regularized law, F_n(s) = int_0^s f_n.
/// The frozen tail is integrated in closed form; the singular stretch uses
/// adaptive Gauss-Kronrod quadrature.
inline double potential(double s, const ConstitutiveLaw& law) {
    if (law.kind != LawKind::RegularizedEuler)
        throw std::invalid_argument("potential: defined for the regularized law only");
    if (!(s >= 0.0)) throw std::invalid_argument("potential: s must be >= 0");
    if (s <= law.m) return 0.0;
    const StressEval ev(law);
    const double frozen = law.frozen_strain();
    const auto f = [&ev](double t) { return ev.magnitude(t); };
    using boost::math::quadrature::gauss_kronrod;
    const double upper = std::min(s, frozen);
    double F = gauss_kronrod<double, 15>::integrate(f, law.m, upper, 15, 1e-12);
    if (s > frozen) {
        const double den = ev.pow_inv_a(ev.Ma - ev.pow_a(frozen));
        F += law.sigma * ((s - law.m) * (s - law.m) - (frozen - law.m) * (frozen - law.m)) /
             (2.0 * den);
    }
    return F;
}

/// Supremum of max(alpha, beta) over [(M+m)/2, M]; beta is increasing toward
/// the cap so the endpoint matters. Dense scan plus local refinement.
inline double alpha_beta_sup(const ConstitutiveLaw& law) {
    const auto value = [&law](double s) {
        const StressEval ev(law);
        const double den = ev.Ma - ev.pow_a(s);
        const double sa = ev.pow_a(s);
        const double alpha = (s - law.m) * den / s;
        const double beta = (2.0 * (s - law.m) * den + (s - law.m) * sa + law.m * den) / s;
        return std::max(alpha, beta);
    };
    const double lo = (law.M + law.m) / 2.0;
    const double hi = law.M;
    const int samples = 4096;
    double best = value(hi);
    int best_i = samples;
    for (int i = 0; i <= samples; ++i) {
        const double s = lo + (hi - lo) * i / samples;
        const double v = value(s);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    // golden-section polish around the best grid cell
    double a0 = lo + (hi - lo) * std::max(0, best_i - 1) / samples;
    double b0 = lo + (hi - lo) * std::min(samples, best_i + 1) / samples;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b0 - gr * (b0 - a0), x2 = a0 + gr * (b0 - a0);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 200 && b0 - a0 > 1e-14 * law.M; ++it) {
        if (f1 < f2) {
            a0 = x1; x1 = x2; f1 = f2;
            x2 = a0 + gr * (b0 - a0); f2 = value(x2);
        } else {
            b0 = x2; x2 = x1; f2 = f1;
            x1 = b0 - gr * (b0 - a0); f1 = value(x1);
        }
    }
    return std::max(best, std::max(f1, f2));
}

/// Constant of the stress-weighted gradient bound
///   |dS_n[dD]|^2 / (1 + |S_n|)^{1+a}  <=  C Q_n(D, dD)   on |D| >= (M+m)/2,
/// assembled from the two branch estimates (moderate strain and frozen
/// denominator). Valid for the sigma = 1 regularized law.
inline double capped_bound_constant(const ConstitutiveLaw& law) {
    if (law.kind != LawKind::RegularizedEuler)
        throw std::invalid_argument("capped_bound_constant: defined for the regularized law only");
    const double half = (law.M - law.m) / 2.0;
    const double c1 = std::pow(2.0, 1.0 + 1.0 / law.a) * alpha_beta_sup(law) /
                      std::pow(half, 1.0 + law.a);
    const double c2 = 8.0 * cap_constant(law) / std::pow(law.M - law.m, 1.0 + law.a);
    return std::max(c1, c2);
}

}  // namespace actev
