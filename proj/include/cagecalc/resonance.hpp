#pragma once

// Near-resonant response of a thick-wire cage: unperturbed modes, the
// solvability integrals and the shifted, damped resonance they predict.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace cagecalc {

/// Unperturbed eigenmode of the solid shell.
///   circle:  psi = scale * N J_m(k* rho) cos m(theta - phase), indices (m, q)
///   square:  psi = scale * sin(l pi (x+1)/2) sin(m pi (y+1)/2), indices (l, m)
///            (cosines for Neumann modes)
/// N makes max |psi| = scale on the circle; the square mode has I1 = scale^2.
struct ModeSpec {
    Curve geometry = Curve::UnitCircle;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    int i1 = 0, i2 = 1;
    double kStar = 0.0;
    bool degenerate = false;
    double scale = 1.0;
    double phase = 0.0;

    std::string normalization() const
    {
        return geometry == Curve::UnitCircle ? "max|psi| = 1 on the disk" : "integral of psi^2 = 1";
    }
};

namespace detail {

inline double circle_norm(int m)
{
    if (m == 0) return 1.0;
    return 1.0 / std::abs(bessel_j(m, bessel_jp_zero(m, 1)));
}

inline double angular_norm(int m) { return m == 0 ? 2 * pi : pi; }

} // namespace detail

inline ModeSpec circle_mode(int m, int q, BoundaryCondition bc = BoundaryCondition::Dirichlet)
{
    ModeSpec s;
    s.geometry = Curve::UnitCircle;
    s.bc = bc;
    s.i1 = m;
    s.i2 = q;
    // the Neumann m = 0 constant mode (k = 0) is excluded
    s.kStar = bc == BoundaryCondition::Dirichlet ? bessel_j_zero(m, q) : bessel_jp_zero(m, q);
    s.degenerate = m >= 1;
    return s;
}

inline ModeSpec square_mode(int l, int m, BoundaryCondition bc = BoundaryCondition::Dirichlet)
{
    if (bc == BoundaryCondition::Dirichlet ? (l < 1 || m < 1) : (l < 0 || m < 0 || l + m == 0))
        throw Error(ErrorKind::DomainError, "invalid square mode indices", l, m);
    ModeSpec s;
    s.geometry = Curve::UnitSquare;
    s.bc = bc;
    s.i1 = l;
    s.i2 = m;
    s.kStar = 0.5 * pi * std::sqrt(double(l * l + m * m));
    s.degenerate = l != m;
    return s;
}

/// All unperturbed resonances in [kMin, kMax], sorted by k*.
inline std::vector<ModeSpec> find_resonances(Curve geometry, double kMin, double kMax,
                                             BoundaryCondition bc = BoundaryCondition::Dirichlet)
{
    if (!(kMin > 0.0) || !(kMax > kMin)) throw Error(ErrorKind::DomainError, "need 0 < kMin < kMax");
    std::vector<ModeSpec> out;
    if (geometry == Curve::UnitCircle) {
        for (int m = 0;; ++m) {
            auto zero = [&](int q) { return bc == BoundaryCondition::Dirichlet ? bessel_j_zero(m, q) : bessel_jp_zero(m, q); };
            if (zero(1) > kMax) break;
            for (int q = 1;; ++q) {
                double z = zero(q);
                if (z > kMax) break;
                if (z >= kMin) out.push_back(circle_mode(m, q, bc));
            }
        }
    } else if (geometry == Curve::UnitSquare) {
        int lo = bc == BoundaryCondition::Dirichlet ? 1 : 0;
        int top = static_cast<int>(2 * kMax / pi) + 1;
        for (int l = lo; l <= top; ++l)
            for (int m = lo; m <= top; ++m) {
                if (l + m == 0) continue;
                ModeSpec s = square_mode(l, m, bc);
                if (s.kStar < kMin || s.kStar > kMax) continue;
                // accidental degeneracies such as (1,7) and (5,5)
                for (int a = lo; a <= top && !s.degenerate; ++a)
                    for (int b = lo; b <= top; ++b)
                        if ((a != l || b != m) && a * a + b * b == l * l + m * m) s.degenerate = true;
                out.push_back(s);
            }
    } else {
        throw Error(ErrorKind::DomainError, "find_resonances needs a curve");
    }
    std::stable_sort(out.begin(), out.end(), [](const ModeSpec& a, const ModeSpec& b) { return a.kStar < b.kStar; });
    return out;
}

/// psi at z.
inline double mode_value(const ModeSpec& s, cplx z)
{
    if (s.geometry == Curve::UnitCircle) {
        double rho = std::abs(z), th = std::arg(z);
        return s.scale * detail::circle_norm(s.i1) * bessel_j(s.i1, s.kStar * rho) * std::cos(s.i1 * (th - s.phase));
    }
    double x = z.real(), y = z.imag();
    double a = 0.5 * pi * s.i1 * (x + 1), b = 0.5 * pi * s.i2 * (y + 1);
    if (s.bc == BoundaryCondition::Dirichlet) return s.scale * std::sin(a) * std::sin(b);
    return s.scale * std::cos(a) * std::cos(b);
}

enum class IntegralMethod { ClosedForm, Quadrature };

struct BasicIntegrals {
    double I1 = 0.0; ///< integral of psi^2 over the interior
    double I2 = 0.0; ///< boundary integral of (dpsi/dn)^2; of psi^2 for Neumann modes
    double I3 = 0.0; ///< boundary integral of kappa (dpsi/dn)^2
};

inline BasicIntegrals mode_integrals_basic(const ModeSpec& s, IntegralMethod method = IntegralMethod::ClosedForm,
                                           double tol = 1e-11)
{
    BasicIntegrals r;
    const double k = s.kStar;
    const bool dir = s.bc == BoundaryCondition::Dirichlet;
    if (s.geometry == Curve::UnitCircle) {
        const int m = s.i1;
        const double N = s.scale * detail::circle_norm(m), ct = detail::angular_norm(m);
        if (method == IntegralMethod::ClosedForm) {
            double Jp = bessel_jp(m, k), J = bessel_j(m, k);
            r.I1 = dir ? N * N * ct * 0.5 * Jp * Jp : N * N * ct * 0.5 * (1.0 - double(m * m) / (k * k)) * J * J;
            r.I2 = dir ? N * N * ct * k * k * Jp * Jp : N * N * ct * J * J;
        } else {
            r.I1 = quad_disk([&](double rho, double th) { return std::pow(mode_value(s, std::polar(rho, th)), 2); }, 1.0,
                             tol);
            r.I2 = quad_periodic(
                [&](double th) {
                    double g = dir ? N * k * bessel_jp(m, k) * std::cos(m * (th - s.phase))
                                   : mode_value(s, std::polar(1.0, th));
                    return g * g;
                },
                tol);
        }
        r.I3 = r.I2;
        return r;
    }
    // square [-1,1]^2
    const int l = s.i1, m = s.i2;
    const double c2 = s.scale * s.scale;
    if (method == IntegralMethod::ClosedForm) {
        double fx = (l == 0 ? 2.0 : 1.0), fy = (m == 0 ? 2.0 : 1.0);
        r.I1 = c2 * fx * fy;
        if (dir)
            r.I2 = c2 * 2.0 * (std::pow(0.5 * pi * l, 2) + std::pow(0.5 * pi * m, 2));
        else
            r.I2 = c2 * 2.0 * (fx + fy);
    } else {
        auto sq = [&](double x, double y) { return std::pow(mode_value(s, cplx(x, y)), 2); };
        r.I1 = quad_1d([&](double y) { return quad_1d([&](double x) { return sq(x, y); }, -1.0, 1.0, tol); }, -1.0,
                       1.0, tol);
        auto edge = [&](double x, double y, bool vertical) {
            if (!dir) return sq(x, y);
            double a = 0.5 * pi * l * (x + 1), b = 0.5 * pi * m * (y + 1);
            double g = vertical ? 0.5 * pi * l * std::cos(a) * std::sin(b) : 0.5 * pi * m * std::sin(a) * std::cos(b);
            return s.scale * s.scale * g * g;
        };
        double sum = 0.0;
        for (double side : {-1.0, 1.0}) {
            sum += quad_1d([&](double y) { return edge(side, y, true); }, -1.0, 1.0, tol);
            sum += quad_1d([&](double x) { return edge(x, side, false); }, -1.0, 1.0, tol);
        }
        r.I2 = sum;
    }
    r.I3 = 0.0; // straight sides; corners carry no curvature weight in this model
    return r;
}

/// First-order shift k~* = -sigma_- I2 / (2 k* I1).
inline double first_order_shift(double sigmaMinus, const ModeSpec& s, double I1, double I2)
{
    if (!(I1 > 0.0)) throw Error(ErrorKind::DomainError, "I1 must be positive", I1);
    return -sigmaMinus * I2 / (2.0 * s.kStar * I1);
}

// ---------------------------------------------------------------------------
// Circle: exterior and interior correction fields

inline void require_circle(const ModeSpec& s)
{
    if (s.geometry != Curve::UnitCircle)
        throw Error(ErrorKind::NotImplemented, "only available for the circular cage");
}

/// phi~0+ = -(dpsi/dn) H_m(k rho)/H_m(k) cos m(theta - phase) outside the unit circle.
struct ExteriorTildeField {
    ModeSpec mode;
    cplx coefficient; ///< multiplies H_m(k rho) cos m(theta - phase)
    cplx I4;

    cplx value(cplx z) const
    {
        return coefficient * hankel1(mode.i1, mode.kStar * std::abs(z)) * std::cos(mode.i1 * (std::arg(z) - mode.phase));
    }
};

inline ExteriorTildeField exterior_tilde_field(const ModeSpec& s, IntegralMethod method = IntegralMethod::ClosedForm)
{
    require_circle(s);
    const int m = s.i1;
    const double k = s.kStar, N = s.scale * detail::circle_norm(m);
    const double dpsi = N * k * bessel_jp(m, k); // dpsi/dn / cos
    ExteriorTildeField f;
    f.mode = s;
    cplx H = hankel1(m, k);
    f.coefficient = -dpsi / H;
    if (method == IntegralMethod::ClosedForm) {
        f.I4 = -dpsi * dpsi * k * hankel1p(m, k) / H * detail::angular_norm(m);
    } else {
        // radial derivative of the field by a centred difference on the exterior side
        const double h = 1e-4;
        f.I4 = quad_periodic(
            [&](double th) {
                cplx dphi = (-f.value(std::polar(1.0 + 2 * h, th)) + 8.0 * f.value(std::polar(1.0 + h, th)) -
                             8.0 * f.value(std::polar(1.0 - h, th)) + f.value(std::polar(1.0 - 2 * h, th))) /
                            (12.0 * h);
                return dphi * dpsi * std::cos(m * (th - s.phase));
            },
            1e-12);
    }
    return f;
}

/// Particular solution phi~0- = -N k rho J_m'(k rho) cos m(theta - phase) + gauge * psi.
struct InteriorParticularField {
    ModeSpec mode;
    double gauge = 0.0;
    double I5 = 0.0, I6 = 0.0;

    double value(cplx z) const
    {
        const int m = mode.i1;
        double rho = std::abs(z), k = mode.kStar;
        double N = mode.scale * detail::circle_norm(m);
        return -N * k * rho * bessel_jp(m, k * rho) * std::cos(m * (std::arg(z) - mode.phase)) + gauge * mode_value(mode, z);
    }
};

inline InteriorParticularField interior_particular_field(const ModeSpec& s, double gauge = 0.0,
                                                         IntegralMethod method = IntegralMethod::ClosedForm)
{
    require_circle(s);
    if (s.degenerate) throw Error(ErrorKind::DegenerateMode, "interior field needs a simple mode", s.kStar, s.i1);
    InteriorParticularField f;
    f.mode = s;
    f.gauge = gauge;
    BasicIntegrals b = mode_integrals_basic(s);
    if (method == IntegralMethod::ClosedForm) {
        // J' + k J'' vanishes at a zero of J_m, so only the gauge term contributes to I5
        f.I5 = gauge * b.I2;
        f.I6 = b.I1 + gauge * b.I1;
    } else {
        const int m = s.i1;
        const double k = s.kStar, N = s.scale * detail::circle_norm(m);
        const double h = 1e-4;
        f.I5 = quad_periodic(
            [&](double th) {
                auto v = [&](double r) { return f.value(std::polar(r, th)); };
                double d = (3 * v(1.0) - 4 * v(1.0 - h) + v(1.0 - 2 * h)) / (2 * h);
                return d * N * k * bessel_jp(m, k) * std::cos(m * (th - s.phase));
            },
            1e-11);
        f.I6 = quad_disk([&](double rho, double th) {
            cplx z = std::polar(rho, th);
            return f.value(z) * mode_value(s, z);
        }, 1.0, 1e-11);
    }
    return f;
}

/// I7 for an exterior point source of unit strength (f = -delta_{z0}).
inline cplx source_integral_I7(const ModeSpec& s, cplx z0, IntegralMethod method = IntegralMethod::ClosedForm)
{
    require_circle(s);
    double r0 = std::abs(z0);
    if (!(r0 > 1.0)) throw Error(ErrorKind::DomainError, "source must lie outside the cage", r0);
    const int m = s.i1;
    const double k = s.kStar, N = s.scale * detail::circle_norm(m);
    const double th0 = std::arg(z0);
    auto e = [&](int n) { return (n == 0 ? 0.25 : 0.5) * I * hankel1(n, k * r0); };
    // d phi^_0+/dn on the circle: sum_n -2 i e_n cos n(theta - th0) / (pi H_n(k))
    if (method == IntegralMethod::ClosedForm) {
        return -2.0 * I * e(m) / (pi * hankel1(m, k)) * N * k * bessel_jp(m, k) * detail::angular_norm(m) *
               std::cos(m * (th0 - s.phase));
    }
    int nmax = std::max(40, static_cast<int>(2 * k * r0) + 20);
    std::vector<cplx> coef(nmax + 1);
    for (int n = 0; n <= nmax; ++n) coef[n] = -2.0 * I * e(n) / (pi * hankel1(n, k));
    return quad_periodic(
        [&](double th) {
            cplx g = 0.0;
            for (int n = 0; n <= nmax; ++n) g += coef[n] * std::cos(n * (th - th0));
            return g * N * k * bessel_jp(m, k) * std::cos(m * (th - s.phase));
        },
        1e-12);
}

/// I8 for an interior point source of unit strength: integral of f psi = -psi(z0).
inline double source_integral_I8(const ModeSpec& s, cplx z0) { return -mode_value(s, z0); }

/// Published value for the square l = m = 1 exterior problem (not computed here).
inline cplx square_I4_fixture() { return {3.00, -16.02}; }

// ---------------------------------------------------------------------------
// Second order: Lorentzian resonance

struct ResonanceInputs {
    double sigmaMinus = 0.0;
    double sigmaTildeMinus = 0.0;
    double tauPlus = 0.0, tauMinus = 0.0;
    double epsilon = 0.0;
    std::optional<double> sigmaTildeModel2;
};

enum class ForcingKind { Exterior, Interior };

struct ResonanceReport {
    ModeSpec mode;
    ResonanceInputs inputs;
    double I1 = 0, I2 = 0, I3 = 0, I5 = 0, I6 = 0;
    cplx I4, I7;
    double I8 = 0.0;
    ForcingKind forcing = ForcingKind::Exterior;
    std::string I4Source = "computed"; ///< "computed" or "fixture"
    double kTildeStar = 0.0;
    double kTildeTildeStar = 0.0;
    std::optional<double> kTildeTildeStarModel2;
    double width = 0.0;         ///< a, reported as a magnitude
    double peakAmplitude = 0.0; ///< |A|, the peak of |C_-1|
    double kPeak = 0.0;         ///< k* + eps k~* + eps^2 k~~*
    double kPeakFirstOrder = 0.0;

    /// |C_-1| at the rescaled detuning k~~.
    double lorentzian(double kTildeTilde) const
    {
        double d = kTildeTilde - kTildeTildeStar;
        return peakAmplitude * width / std::sqrt(d * d + width * width);
    }

    /// |C_-1| at wavenumber k.
    double lorentzian_k(double k) const
    {
        double e = inputs.epsilon;
        return lorentzian((k - mode.kStar - e * kTildeStar) / (e * e));
    }

    /// Field scale 1/eps (exterior source) or 1/eps^2 (interior source).
    double interior_scale() const
    {
        return forcing == ForcingKind::Exterior ? 1.0 / inputs.epsilon : 1.0 / (inputs.epsilon * inputs.epsilon);
    }

    /// Predicted peak of |phi| at an interior point.
    double peak_field(cplx z) const { return peakAmplitude * interior_scale() * std::abs(mode_value(mode, z)); }

    /// Full width at half maximum in k.
    double fwhm_k() const { return 2.0 * std::sqrt(3.0) * width * inputs.epsilon * inputs.epsilon; }
};

struct ModeIntegrals {
    BasicIntegrals basic;
    cplx I4;
    double I5 = 0.0, I6 = 0.0;
    std::string I4Source = "computed";
};

/// Second-order shift, width and amplitude. `forcingValue` is I7 (exterior
/// source, multiplied by tau_+ internally) or I8 (interior source).
inline ResonanceReport second_order(const ModeSpec& mode, const ResonanceInputs& in, const ModeIntegrals& mi,
                                    ForcingKind kind, cplx forcingValue)
{
    if (mode.degenerate)
        throw Error(ErrorKind::DegenerateMode, "second-order analysis assumes a simple eigenvalue", mode.kStar, mode.i1);
    if (mi.I4.imag() == 0.0) throw Error(ErrorKind::ZeroDamping, "Im(I4) = 0: no radiative damping");
    ResonanceReport r;
    r.mode = mode;
    r.inputs = in;
    r.forcing = kind;
    r.I1 = mi.basic.I1;
    r.I2 = mi.basic.I2;
    r.I3 = mi.basic.I3;
    r.I4 = mi.I4;
    r.I5 = mi.I5;
    r.I6 = mi.I6;
    r.I4Source = mi.I4Source;
    if (kind == ForcingKind::Exterior)
        r.I7 = forcingValue;
    else
        r.I8 = forcingValue.real();
    const double k = mode.kStar, s = in.sigmaMinus, tt = in.tauPlus * in.tauMinus;
    r.kTildeStar = first_order_shift(s, mode, r.I1, r.I2);
    auto kk = [&](double sigmaTilde) {
        return -(r.I1 * r.kTildeStar * r.kTildeStar - sigmaTilde * r.I3 - tt * r.I4.real() + s * s * r.I5 +
                 2 * k * r.kTildeStar * s * r.I6) /
               (2 * r.I1 * k);
    };
    r.kTildeTildeStar = kk(in.sigmaTildeMinus);
    if (in.sigmaTildeModel2) r.kTildeTildeStarModel2 = kk(*in.sigmaTildeModel2);
    r.width = std::abs(tt * r.I4.imag() / (2 * r.I1 * k));
    // solvability: (2 k I1 (k~~ - k~~*) - i tt Im I4) C = forcing
    cplx forcing = kind == ForcingKind::Exterior ? in.tauPlus * forcingValue : forcingValue;
    if (tt == 0.0) throw Error(ErrorKind::ZeroDamping, "tau_+ tau_- = 0: no leakage damping");
    r.peakAmplitude = std::abs(forcing) / std::abs(tt * r.I4.imag());
    r.kPeakFirstOrder = k + in.epsilon * r.kTildeStar;
    r.kPeak = r.kPeakFirstOrder + in.epsilon * in.epsilon * r.kTildeTildeStar;
    return r;
}

/// Circle pipeline: integrals in closed form, exterior source.
inline ModeIntegrals circle_mode_integrals(const ModeSpec& mode, IntegralMethod method = IntegralMethod::ClosedForm,
                                           double gauge = 0.0)
{
    ModeIntegrals mi;
    mi.basic = mode_integrals_basic(mode, method);
    mi.I4 = exterior_tilde_field(mode, method).I4;
    auto f = interior_particular_field(mode, gauge, method);
    mi.I5 = f.I5;
    mi.I6 = f.I6;
    return mi;
}

/// Square l = m = 1 pipeline with the published I4. The interior particular
/// field of the square is not available; I5 and I6 are left at zero, which
/// only affects k~~*.
inline ModeIntegrals square_mode_integrals(const ModeSpec& mode)
{
    if (mode.geometry != Curve::UnitSquare || mode.i1 != 1 || mode.i2 != 1)
        throw Error(ErrorKind::NotImplemented, "I4 is only available for the square (1,1) mode");
    ModeIntegrals mi;
    mi.basic = mode_integrals_basic(mode);
    mi.I4 = square_I4_fixture() * mode.scale * mode.scale;
    mi.I4Source = "fixture";
    return mi;
}

// ---------------------------------------------------------------------------
// Neumann perforated shell

struct NeumannResonance {
    double kShifted = 0.0;
    double shift = 0.0;
    double amplitudeScale = 0.0; ///< eps lambda
    bool regimeWarning = false;
};

inline NeumannResonance neumann_resonance(const ModeSpec& mode, double epsLambda)
{
    if (mode.bc != BoundaryCondition::Neumann)
        throw Error(ErrorKind::DomainError, "neumann_resonance needs a Neumann eigenmode");
    if (!(epsLambda > 0.0)) throw Error(ErrorKind::DomainError, "eps*lambda must be positive", epsLambda);
    BasicIntegrals b = mode_integrals_basic(mode);
    NeumannResonance r;
    r.shift = b.I2 / (4.0 * mode.kStar * b.I1) / epsLambda;
    r.kShifted = mode.kStar + r.shift;
    r.amplitudeScale = epsLambda;
    r.regimeWarning = epsLambda < 5.0;
    return r;
}

} // namespace cagecalc
