#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <utility>

#include "cell_multipole.hpp"
#include "cell_strip.hpp"
#include "cell_types.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace cagecalc {

// ---------------------------------------------------------------------------
// Closed forms for line segments (conformal maps)

inline void check_delta(WireShape shape, double delta)
{
    if (!(delta > 0.0)) throw Error(ErrorKind::DomainError, "delta must be positive", delta);
    if (delta > delta_max(shape)) throw Error(ErrorKind::WireOverlap, "delta above delta_max", delta);
}

inline FarFieldConstants cell_dirichlet_analytic(WireShape shape, double delta)
{
    check_delta(shape, delta);
    FarFieldConstants c;
    c.a0 = std::log(2.0);
    if (shape == WireShape::TangentialSegment) {
        double s = -std::log(std::sin(pi * delta)) / (2 * pi);
        c.sigmaPlus = c.sigmaMinus = c.tauPlus = c.tauMinus = s;
        c.lambda = -std::log(std::cos(pi * delta)) / pi;
    } else if (shape == WireShape::PerpendicularSegment) {
        c.sigmaPlus = c.sigmaMinus = -std::log(std::sinh(2 * pi * delta) / 2) / (2 * pi);
        c.tauPlus = c.tauMinus = -std::log(std::tanh(pi * delta)) / (2 * pi);
        c.lambda = 0.0;
    } else {
        throw Error(ErrorKind::NotImplemented, "closed forms exist only for line segments");
    }
    return c;
}

namespace detail {

/// log|sin w| without overflow for large |Im w|.
inline double log_abs_sin(cplx w)
{
    double sgn = w.imag() >= 0 ? 1.0 : -1.0;
    if (std::abs(w.imag()) < 20.0) return std::log(std::abs(std::sin(w)));
    return std::abs(w.imag()) + std::log(std::abs(0.5 * (1.0 - std::exp(2.0 * I * sgn * w))));
}

inline double log_abs_sinh(cplx w) { return log_abs_sin(I * w); }

} // namespace detail

// The slit maps below use zeta^2 in closed form for the factor that tends to
// zero as N -> +inf; the naive difference cancels catastrophically past N ~ 3.

/// Phi^+ for a tangential slit of half-length delta.
inline double tangential_phi_plus(double delta, cplx Z)
{
    cplx e = std::polar(1.0, pi * delta);
    cplx w = pi * (I * Z - delta);
    cplx z = std::sqrt(std::sin(pi * (I * Z + delta)) / std::sin(w));
    // conj(e)^2 - zeta^2 = -exp(-pi Z - i pi delta) sin(2 pi delta) / sin w
    double logDiff = -pi * Z.real() + std::log(std::sin(2 * pi * delta)) - detail::log_abs_sin(w);
    return (std::log(std::abs(e + z)) + std::log(std::abs(std::conj(e) + z)) - logDiff) / (2 * pi);
}

/// Psi (Neumann blockage problem) for a tangential slit.
inline double tangential_psi(double delta, cplx Z)
{
    cplx e = std::polar(1.0, pi * delta);
    cplx z = std::sqrt(std::sin(pi * (I * Z + delta)) / std::sin(pi * (I * Z - delta)));
    return Z.real() + std::log(std::abs((std::conj(e) + z) / (e + z))) / pi;
}

/// Phi^+ for a perpendicular slit of half-length delta.
inline double perpendicular_phi_plus(double delta, cplx Z)
{
    double e = std::exp(-pi * delta);
    cplx w = pi * (Z + delta);
    cplx z = std::sqrt(std::sinh(pi * (Z - delta)) / std::sinh(w));
    // e^2 - zeta^2 = exp(-pi Z - pi delta) sinh(2 pi delta) / sinh w
    double logDiff = -pi * (Z.real() + delta) + std::log(std::sinh(2 * pi * delta)) - detail::log_abs_sinh(w);
    return (2.0 * std::log(std::abs(e + z)) - logDiff) / (2 * pi);
}

// ---------------------------------------------------------------------------
// Numerical cell problems

enum class CellMethod { Auto, Multipole, FiniteVolume };

/// Sample a periodic multipole solution on a uniform grid; NaN in the disk.
inline CellSolution sample_strip_harmonic(const StripHarmonic& u, BoundaryCondition bc, double h = 0.025,
                                          double Nmax = 4.0)
{
    CellSolution c;
    c.shape = WireShape::Disk;
    c.delta = u.delta;
    c.bc = bc;
    c.Nmax = Nmax;
    c.h = h;
    int nx = static_cast<int>(std::lround(2 * Nmax / h));
    int ny = static_cast<int>(std::lround(1.0 / h));
    for (int i = 0; i < nx; ++i) c.N.push_back(-Nmax + (i + 0.5) * h);
    for (int j = 0; j < ny; ++j) {
        c.S.push_back(-0.5 + (j + 0.5) / ny);
        c.weightS.push_back(1.0 / ny);
    }
    PeriodicDiskBasis B(u.delta, static_cast<int>(u.a.size()) + 1);
    std::vector<cplx> tmp;
    c.values.resize(ny, nx);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            cplx Z(c.N[i], c.S[j]);
            c.values(j, i) = std::abs(Z) < u.delta ? std::numeric_limits<double>::quiet_NaN() : u.value(B, Z, tmp);
        }
    return c;
}

struct CellResult {
    CellSolution solution;
    FarFieldConstants constants;
};

/// Dirichlet cell constants. Disks default to the spectral multipole
/// solver, everything else to the graded finite-volume solver.
inline CellResult cell_dirichlet_numeric(WireShape shape, double delta, const StripGridSpec& spec = {},
                                         CellMethod method = CellMethod::Auto)
{
    check_delta(shape, delta);
    if (method == CellMethod::Auto) method = shape == WireShape::Disk ? CellMethod::Multipole : CellMethod::FiniteVolume;
    CellResult r;
    if (method == CellMethod::Multipole) {
        if (shape != WireShape::Disk) throw Error(ErrorKind::NotImplemented, "multipole cells are for disks only");
        auto d = disk_dirichlet(delta);
        r.solution = sample_strip_harmonic(d.phi, BoundaryCondition::Dirichlet, 0.025, spec.Nmax);
        r.constants.sigmaPlus = r.constants.sigmaMinus = d.sigma;
        r.constants.tauPlus = r.constants.tauMinus = d.tau;
    } else {
        auto s = strip_dirichlet(shape, delta, spec);
        r.solution = std::move(s.solution);
        r.constants.sigmaPlus = r.constants.sigmaMinus = s.sigma;
        r.constants.tauPlus = r.constants.tauMinus = s.tau;
    }
    r.constants.a0 = log_capacity_a0(shape);
    return r;
}

struct NeumannCellResult {
    std::optional<CellSolution> solution;
    double lambda = 0.0;
};

inline NeumannCellResult cell_neumann(WireShape shape, double delta, const StripGridSpec& spec = {},
                                      CellMethod method = CellMethod::Auto)
{
    check_delta(shape, delta);
    NeumannCellResult r;
    switch (shape) {
    case WireShape::PerpendicularSegment: r.lambda = 0.0; return r;
    case WireShape::TangentialSegment:
        if (method != CellMethod::FiniteVolume) {
            r.lambda = -std::log(std::cos(pi * delta)) / pi;
            return r;
        }
        break;
    case WireShape::Disk:
        if (method != CellMethod::FiniteVolume) {
            auto d = disk_neumann(delta);
            r.lambda = d.lambda;
            r.solution = sample_strip_harmonic(d.psi, BoundaryCondition::Neumann, 0.025, spec.Nmax);
            return r;
        }
        break;
    case WireShape::Square: break;
    }
    auto s = strip_neumann(shape, delta, spec);
    r.lambda = s.lambda;
    r.solution = std::move(s.solution);
    return r;
}

struct TildeConstants {
    double sigmaTilde = 0.0; ///< sigma~+ = sigma~- for the symmetric disk
    double tauTilde = 0.0;
};

inline TildeConstants cell_dirichlet_tilde(WireShape shape, double delta, WireModel model)
{
    if (shape != WireShape::Disk) throw Error(ErrorKind::NotImplemented, "curvature cell problem only for disks");
    check_delta(shape, delta);
    if (delta >= 0.5) throw Error(ErrorKind::WireOverlap, "touching disks", delta);
    auto t = disk_dirichlet_tilde(delta, model);
    return {t.sigmaTilde, t.tauTilde};
}

/// mu-check = 1/2 Area(K), evaluated as (1/2) of the boundary integral of N nu_N.
inline double mu_check(WireShape shape, double delta)
{
    check_delta(shape, delta);
    switch (shape) {
    case WireShape::Disk:
        return 0.5 * quad_1d([&](double t) { return delta * std::cos(t) * std::cos(t) * delta; }, 0.0, 2 * pi, 1e-13);
    case WireShape::Square: {
        std::vector<cplx> v = reference_wire(WireShape::Square, 4);
        double sum = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            cplx p = delta * v[k], q = delta * v[(k + 1) % v.size()];
            cplx t = q - p;
            double len = std::abs(t);
            double nuN = t.imag() / len; // outward normal of a counterclockwise polygon
            sum += quad_1d([&](double u) { return (p + (u / len) * t).real() * nuN; }, 0.0, len, 1e-13);
        }
        return 0.5 * sum;
    }
    default: return 0.0;
    }
}

struct NeumannHigher {
    double muTilde = 0.0, muHat = 0.0, muCheck = 0.0;
};

inline NeumannHigher cell_neumann_higher(WireShape shape, double delta, WireModel model)
{
    check_delta(shape, delta);
    NeumannHigher r;
    if (shape == WireShape::TangentialSegment && model == WireModel::Model2) {
        // slit on N = 0: the integrand reduces to Psi nu_N on both faces
        double lambda = -std::log(std::cos(pi * delta)) / pi;
        double face = quad_1d(
            [&](double t) {
                double S = delta * std::sin(t);
                return tangential_psi(delta, cplx(1e-14, S)) * delta * std::cos(t);
            },
            -pi / 2, pi / 2, 1e-12);
        r.muTilde = lambda - face;
        r.muHat = 0.0; // odd symmetry in N
        r.muCheck = mu_check(shape, delta);
        return r;
    }
    if (shape == WireShape::Disk) {
        auto h = disk_neumann_higher(delta, model);
        r.muTilde = h.muTildeSolve;
        r.muHat = 0.0;
        r.muCheck = h.muCheckSolve;
        return r;
    }
    throw Error(ErrorKind::NotImplemented, "higher Neumann constants for this shape and model");
}

} // namespace cagecalc
