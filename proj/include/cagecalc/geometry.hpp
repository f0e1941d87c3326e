#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace cagecalc {

enum class Curve { UnitCircle, UnitSquare, None };
enum class WireShape { Disk, PerpendicularSegment, TangentialSegment, Square };
enum class WireModel { Model1, Model2 };
enum class BoundaryCondition { Dirichlet, Neumann };
enum class Equation { Laplace, Helmholtz };

inline const char* to_string(Curve c)
{
    switch (c) {
    case Curve::UnitCircle: return "circle";
    case Curve::UnitSquare: return "square";
    case Curve::None: return "none";
    }
    return "?";
}

inline const char* to_string(WireShape s)
{
    switch (s) {
    case WireShape::Disk: return "disk";
    case WireShape::PerpendicularSegment: return "perpendicular";
    case WireShape::TangentialSegment: return "tangential";
    case WireShape::Square: return "square";
    }
    return "?";
}

/// Largest admissible scaled radius before neighbouring wires touch.
inline double delta_max(WireShape s)
{
    switch (s) {
    case WireShape::Disk:
    case WireShape::TangentialSegment: return 0.5;
    case WireShape::Square: return 1.0 / std::sqrt(2.0);
    case WireShape::PerpendicularSegment: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

/// Capacity constant entering the thin-wire parameter alpha.
inline double log_capacity_a0(WireShape s)
{
    switch (s) {
    case WireShape::Disk: return 0.0;
    case WireShape::PerpendicularSegment:
    case WireShape::TangentialSegment: return std::log(2.0);
    case WireShape::Square:
        // capacity of a square of side L is 0.59017 L; here L = sqrt(2)
        return -std::log(0.5901702995 * std::sqrt(2.0));
    }
    return 0.0;
}

/// Area of the reference wire K (circumradius one) scaled by delta.
inline double wire_area(WireShape s, double delta)
{
    switch (s) {
    case WireShape::Disk: return pi * delta * delta;
    case WireShape::Square: return 2.0 * delta * delta;
    default: return 0.0;
    }
}

/// The square cage is [-1,1]^2, arc length measured counterclockwise from (1,0).
inline double perimeter(Curve c)
{
    switch (c) {
    case Curve::UnitCircle: return 2.0 * pi;
    case Curve::UnitSquare: return 8.0;
    case Curve::None: return 0.0;
    }
    return 0.0;
}

struct CurvePoint {
    cplx z;
    double normalAngle; ///< outward normal direction
    double curvature;
};

inline CurvePoint curve_point(Curve c, double s)
{
    if (c == Curve::UnitCircle) return {std::polar(1.0, s), s, 1.0};
    if (c != Curve::UnitSquare) throw Error(ErrorKind::DomainError, "curve_point on empty curve");
    double L = 8.0;
    s = std::fmod(s, L);
    if (s < 0) s += L;
    // corners sit at s = 1, 3, 5, 7; their normal is the bisector
    const double tol = 1e-12;
    for (int k = 0; k < 4; ++k) {
        double sc = 1.0 + 2.0 * k;
        if (std::abs(s - sc) < tol) {
            double ang = pi / 4 + k * pi / 2;
            return {std::polar(std::sqrt(2.0), ang), ang, 0.0};
        }
    }
    if (s < 1.0) return {cplx(1.0, s), 0.0, 0.0};
    if (s < 3.0) return {cplx(1.0 - (s - 1.0), 1.0), pi / 2, 0.0};
    if (s < 5.0) return {cplx(-1.0, 1.0 - (s - 3.0)), pi, 0.0};
    if (s < 7.0) return {cplx(-1.0 + (s - 5.0), -1.0), 3 * pi / 2, 0.0};
    return {cplx(1.0, -1.0 + (s - 7.0)), 0.0, 0.0};
}

struct CageConfig {
    Curve curve = Curve::UnitCircle;
    int M = 30;
    double delta = 0.1;
    WireShape wireShape = WireShape::Disk;
    WireModel wireModel = WireModel::Model1;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    double startArc = 0.0; ///< arc length of the first wire center
};

struct CageGeometry {
    CageConfig config;
    std::vector<cplx> centers;
    std::vector<double> normalAngles;
    std::vector<double> arcPositions;
    double epsilon = 0.0;
    double wireRadius = 0.0;

    int M() const { return static_cast<int>(centers.size()); }
};

inline CageGeometry build_cage(const CageConfig& cfg)
{
    if (cfg.M < 3) throw Error(ErrorKind::InvalidCount, "need at least 3 wires", cfg.M);
    if (!(cfg.delta > 0.0)) throw Error(ErrorKind::DomainError, "delta must be positive", cfg.delta);
    if (cfg.delta >= delta_max(cfg.wireShape))
        throw Error(ErrorKind::WireOverlap, "delta >= delta_max for this wire shape", cfg.delta);
    if (cfg.curve == Curve::None) throw Error(ErrorKind::DomainError, "curve must be set");
    CageGeometry g;
    g.config = cfg;
    g.epsilon = perimeter(cfg.curve) / cfg.M;
    g.wireRadius = cfg.delta * g.epsilon;
    for (int j = 0; j < cfg.M; ++j) {
        double s = cfg.startArc + j * g.epsilon;
        CurvePoint p = curve_point(cfg.curve, s);
        g.centers.push_back(p.z);
        double a = std::fmod(p.normalAngle, 2 * pi);
        if (a < 0) a += 2 * pi;
        g.normalAngles.push_back(a);
        g.arcPositions.push_back(s);
    }
    return g;
}

/// A cage with no wires: solvers then return the free field.
inline CageGeometry empty_cage()
{
    CageGeometry g;
    g.config.curve = Curve::None;
    g.config.M = 0;
    return g;
}

/// (n, s) -> z. Circle: (1+n)e^{is}; square: gamma(s) + n nu(s) on the sides.
inline cplx curvilinear_map(Curve c, double n, double s)
{
    if (c == Curve::UnitCircle) {
        if (n <= -1.0) throw Error(ErrorKind::OutOfReach, "n <= -1 on the unit circle", n);
        return (1.0 + n) * std::polar(1.0, s);
    }
    CurvePoint p = curve_point(c, s);
    return p.z + n * std::polar(1.0, p.normalAngle);
}

struct NormalCoords {
    double n;
    double s;
};

inline NormalCoords curvilinear_inverse(Curve c, cplx z)
{
    if (c == Curve::UnitCircle) {
        double r = std::abs(z);
        if (r == 0.0) throw Error(ErrorKind::OutOfReach, "origin has no unique projection");
        double s = std::atan2(z.imag(), z.real());
        if (s < 0) s += 2 * pi;
        return {r - 1.0, s};
    }
    // nearest point on the boundary of [-1,1]^2
    double x = z.real(), y = z.imag();
    double ax = std::abs(x), ay = std::abs(y);
    if (ax == ay) throw Error(ErrorKind::OutOfReach, "point on a diagonal of the square");
    if (ax > 1.0 && ay > 1.0) throw Error(ErrorKind::OutOfReach, "nearest point is a corner");
    double n, s;
    if (ax > ay) {
        n = ax - 1.0;
        s = x > 0 ? (y >= 0 ? y : 8.0 + y) : 3.0 + (1.0 - y);
    } else {
        n = ay - 1.0;
        s = y > 0 ? 1.0 + (1.0 - x) : 5.0 + (x + 1.0);
    }
    return {n, s};
}

/// Boundary of the reference wire K in local (n~, s~) coordinates,
/// normalised to circumradius one.
inline std::vector<cplx> reference_wire(WireShape shape, int nPts)
{
    std::vector<cplx> pts;
    pts.reserve(nPts);
    for (int i = 0; i < nPts; ++i) {
        double t = static_cast<double>(i) / nPts;
        switch (shape) {
        case WireShape::Disk: pts.push_back(std::polar(1.0, 2 * pi * t)); break;
        case WireShape::PerpendicularSegment:
            pts.push_back(cplx(-1.0 + 2.0 * i / std::max(nPts - 1, 1), 0.0));
            break;
        case WireShape::TangentialSegment:
            pts.push_back(cplx(0.0, -1.0 + 2.0 * i / std::max(nPts - 1, 1)));
            break;
        case WireShape::Square: {
            const double a = 1.0 / std::sqrt(2.0);
            double u = 4.0 * t;
            int side = static_cast<int>(u);
            double f = u - side;
            cplx c[5] = {cplx(a, -a), cplx(a, a), cplx(-a, a), cplx(-a, -a), cplx(a, -a)};
            pts.push_back(c[side] + f * (c[side + 1] - c[side]));
            break;
        }
        }
    }
    return pts;
}

/// Points on the boundary of wire j (0-based).
inline std::vector<cplx> wire_boundary(const CageGeometry& geom, int j, int nPts)
{
    if (j < 0 || j >= geom.M()) throw Error(ErrorKind::DomainError, "wire index out of range", j);
    const auto& cfg = geom.config;
    std::vector<cplx> ref = reference_wire(cfg.wireShape, nPts);
    std::vector<cplx> out;
    out.reserve(ref.size());
    double r = geom.wireRadius;
    for (cplx p : ref) {
        if (cfg.wireModel == WireModel::Model1) {
            out.push_back(geom.centers[j] + std::polar(1.0, geom.normalAngles[j]) * (r * p));
        } else {
            out.push_back(curvilinear_map(cfg.curve, r * p.real(), geom.arcPositions[j] + r * p.imag()));
        }
    }
    return out;
}

} // namespace cagecalc
