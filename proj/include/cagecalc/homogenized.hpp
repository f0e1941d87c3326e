#pragma once

// Homogenized outer solutions for a cage on the unit circle, with the
// source at z0 and the interior field expanded in cos m(theta - arg z0).

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace cagecalc {

enum class Regime { ThinDirichlet, ThickDirichlet, NeumannShell };

struct AlphaResult {
    double alpha = 0.0;
    bool infinite = false; ///< denominator vanishes (delta = delta_inf)
    double deltaInf = 0.0;
};

/// alpha = 2 pi / (eps (log(1/(2 pi delta)) + a0)). Throws InvalidRegime
/// past delta_inf = e^{a0}/(2 pi), where the denominator changes sign.
inline AlphaResult alpha_of(double delta, double a0, double epsilon)
{
    if (!(delta > 0.0) || !(epsilon > 0.0)) throw Error(ErrorKind::DomainError, "alpha needs delta, eps > 0");
    AlphaResult r;
    r.deltaInf = std::exp(a0) / (2 * pi);
    double den = std::log(1.0 / (2 * pi * delta)) + a0;
    if (std::abs(den) < 1e-12) {
        r.infinite = true;
        r.alpha = std::numeric_limits<double>::infinity();
        return r;
    }
    if (den < 0.0)
        throw Error(ErrorKind::InvalidRegime, "delta beyond delta_inf, alpha <= 0", r.deltaInf);
    r.alpha = 2 * pi / (epsilon * den);
    return r;
}

/// Interior field sum_m c_m R_m(rho) cos m(theta - theta0) with
/// R_m = rho^m (Laplace) or J_m(k rho) (Helmholtz).
struct OuterSeries {
    Regime regime = Regime::ThinDirichlet;
    Equation equation = Equation::Laplace;
    double k = 0.0;
    cplx z0{2.0, 0.0};
    double alpha = 0.0, tauPlus = 0.0, epsilon = 0.0;
    std::vector<cplx> c; ///< c[m], m = 0..m_max

    int m_max() const { return static_cast<int>(c.size()) - 1; }

    cplx value_at(double rho, double theta) const
    {
        double th = theta - std::arg(z0);
        cplx s = 0.0;
        for (int m = 0; m <= m_max(); ++m) {
            double R = equation == Equation::Laplace ? std::pow(rho, m) : bessel_j(m, k * rho);
            s += c[m] * R * std::cos(m * th);
        }
        return s;
    }

    cplx value_at_origin() const { return c.empty() ? cplx(0.0) : c[0]; }

    /// |grad phi| at an interior point, sqrt(|phi_rho|^2 + |phi_theta / rho|^2).
    double gradient_at(double rho, double theta) const
    {
        if (rho == 0.0) return gradient_at_origin();
        double th = theta - std::arg(z0);
        cplx dr = 0.0, dt = 0.0;
        for (int m = 0; m <= m_max(); ++m) {
            double R, Rp;
            if (equation == Equation::Laplace) {
                R = std::pow(rho, m);
                Rp = m * std::pow(rho, m - 1);
            } else {
                R = bessel_j(m, k * rho);
                Rp = k * bessel_jp(m, k * rho);
            }
            dr += c[m] * Rp * std::cos(m * th);
            dt -= c[m] * R * double(m) * std::sin(m * th) / rho;
        }
        return std::sqrt(std::norm(dr) + std::norm(dt));
    }

    /// |grad phi(0)|, carried entirely by the m = 1 term.
    double gradient_at_origin() const
    {
        if (c.size() < 2) return 0.0;
        double scale = equation == Equation::Laplace ? 1.0 : 0.5 * k;
        return std::abs(c[1]) * scale;
    }
};

namespace detail {

/// Append terms until the tail is negligible against the partial sum.
/// `weight(m)` is the size of the radial factor on the cage (rho = 1).
template <class Term, class Weight>
std::vector<cplx> adaptive_series(Term term, Weight weight, int mMin = 40, int mCap = 2000)
{
    std::vector<cplx> c;
    double partial = 0.0;
    int small = 0;
    for (int m = 0; m <= mCap; ++m) {
        cplx t = term(m);
        c.push_back(t);
        double size = std::abs(t) * weight(m);
        partial += size;
        small = (size < 1e-17 * partial) ? small + 1 : 0;
        if (m >= mMin && small >= 4) break;
    }
    return c;
}

inline void check_source(cplx z0, bool exterior = true)
{
    if (exterior && !(std::abs(z0) > 1.0)) throw Error(ErrorKind::DomainError, "source must lie outside the cage");
}

} // namespace detail

/// Thin-wire Laplace interior (gradient part; the constant is dropped).
inline OuterSeries laplace_thin_interior(cplx z0, double alpha)
{
    detail::check_source(z0);
    if (alpha < 0.0) throw Error(ErrorKind::InvalidRegime, "alpha must be positive", alpha);
    OuterSeries s;
    s.regime = Regime::ThinDirichlet;
    s.equation = Equation::Laplace;
    s.z0 = z0;
    s.alpha = alpha;
    double r0 = std::abs(z0);
    if (std::isinf(alpha)) {
        s.c.assign(2, 0.0);
        return s;
    }
    s.c = detail::adaptive_series([&](int m) -> cplx {
        if (m == 0) return 0.0;
        return 1.0 / (pi * (alpha + 2.0 * m) * std::pow(r0, m));
    }, [](int) { return 1.0; });
    return s;
}

inline OuterSeries laplace_thick_interior(cplx z0, double tauPlus, double epsilon)
{
    detail::check_source(z0);
    OuterSeries s;
    s.regime = Regime::ThickDirichlet;
    s.equation = Equation::Laplace;
    s.z0 = z0;
    s.tauPlus = tauPlus;
    s.epsilon = epsilon;
    double r0 = std::abs(z0);
    s.c = detail::adaptive_series([&](int m) -> cplx {
        if (m == 0) return 0.0;
        return tauPlus * epsilon / (pi * std::pow(r0, m));
    }, [](int) { return 1.0; });
    return s;
}

/// Free-field modal amplitudes e_0 = (i/4)H_0(k|z0|), e_m = (i/2)H_m(k|z0|).
inline cplx source_mode(int m, double k, double r0)
{
    return (m == 0 ? 0.25 : 0.5) * I * hankel1(m, k * r0);
}

/// Thin-wire Helmholtz interior. The modal factor
///   1 + (alpha/k)(J'/J - H'/H)^{-1}
/// is evaluated as 1 + (i pi alpha / 2) J_m(k) H_m(k), equal by the Wronskian.
inline OuterSeries helmholtz_thin_interior(double k, cplx z0, double alpha)
{
    detail::check_source(z0);
    if (!(k > 0.0)) throw Error(ErrorKind::DomainError, "k must be positive", k);
    if (alpha < 0.0) throw Error(ErrorKind::InvalidRegime, "alpha must be positive", alpha);
    OuterSeries s;
    s.regime = Regime::ThinDirichlet;
    s.equation = Equation::Helmholtz;
    s.k = k;
    s.z0 = z0;
    s.alpha = alpha;
    double r0 = std::abs(z0);
    int mMin = std::max(40, static_cast<int>(2 * k * r0) + 20);
    s.c = detail::adaptive_series(
        [&](int m) -> cplx {
            cplx den = 1.0 + 0.5 * I * pi * alpha * bessel_j(m, k) * hankel1(m, k);
            return source_mode(m, k, r0) / den;
        },
        [&](int m) { return std::abs(bessel_j(m, k)); }, mMin, 400);
    return s;
}

/// Index m and nearest zero when k is within the guard band of a zero of J_m.
struct ResonanceGuard {
    bool near = false;
    int m = -1;
    double zero = 0.0;
};

inline ResonanceGuard near_resonance(double k, double epsilon, int mMax)
{
    ResonanceGuard g;
    for (int m = 0; m <= mMax; ++m) {
        if (bessel_j_zero(m, 1) > k + 0.5) break;
        double J = bessel_j(m, k), Jp = bessel_jp(m, k);
        if (std::abs(J) < 1e-2 * std::max(1.0, std::abs(Jp) * epsilon)) {
            g.near = true;
            g.m = m;
            double best = 1e300;
            for (int q = 1;; ++q) {
                double z = bessel_j_zero(m, q);
                if (std::abs(z - k) < std::abs(best - k)) best = z;
                if (z > k + 1.0) break;
            }
            g.zero = best;
            return g;
        }
    }
    return g;
}

inline OuterSeries helmholtz_thick_interior(double k, cplx z0, double tauPlus, double epsilon)
{
    detail::check_source(z0);
    if (!(k > 0.0)) throw Error(ErrorKind::DomainError, "k must be positive", k);
    double r0 = std::abs(z0);
    int mMin = std::max(40, static_cast<int>(2 * k * r0) + 20);
    ResonanceGuard g = near_resonance(k, epsilon, mMin);
    if (g.near)
        throw Error(ErrorKind::NearResonance, "k within the guard band of a zero of J_" + std::to_string(g.m),
                    g.zero, g.m);
    OuterSeries s;
    s.regime = Regime::ThickDirichlet;
    s.equation = Equation::Helmholtz;
    s.k = k;
    s.z0 = z0;
    s.tauPlus = tauPlus;
    s.epsilon = epsilon;
    // k eps tau (J'/J - H'/H) = -2 i eps tau / (pi J H)
    s.c = detail::adaptive_series(
        [&](int m) -> cplx {
            if (tauPlus == 0.0) return cplx(0.0);
            cplx jh = bessel_j(m, k) * hankel1(m, k);
            return source_mode(m, k, r0) * (-2.0 * I * epsilon * tauPlus) / (pi * jh);
        },
        [&](int m) { return std::abs(bessel_j(m, k)); }, mMin, 400);
    return s;
}

/// Exterior field of a solid Neumann shell (image method), Laplace.
inline double neumann_shell_exterior_laplace(cplx z0, cplx z)
{
    cplx img = 1.0 / std::conj(z0);
    return -(std::log(std::abs(z - z0)) + std::log(std::abs(z - img)) - std::log(std::abs(z))) / (2 * pi);
}

struct NeumannShellEstimate {
    double interiorConstant = 0.0; ///< Laplace: leading interior value
    double scale = 0.0;            ///< 1/(eps lambda)
    bool regimeWarning = false;    ///< eps lambda < 5
};

inline NeumannShellEstimate neumann_shell(Equation eq, double k, cplx z0, double epsLambda)
{
    detail::check_source(z0);
    if (!(epsLambda > 0.0)) throw Error(ErrorKind::DomainError, "eps*lambda must be positive", epsLambda);
    (void)k;
    NeumannShellEstimate r;
    if (eq == Equation::Laplace) r.interiorConstant = -std::log(std::abs(z0)) / (2 * pi);
    r.scale = 1.0 / epsLambda;
    r.regimeWarning = epsLambda < 5.0;
    return r;
}

/// eps*lambda for a tangential shell with delta = 1/2 - A e^{-c/eps}.
inline double tangential_shell_eps_lambda(double A, double c, double epsilon)
{
    return c / pi - (epsilon / pi) * std::log(pi * A);
}

} // namespace cagecalc
