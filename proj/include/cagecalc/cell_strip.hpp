#pragma once

// Finite-volume solver for the cell problems on the half strip
// 0 <= S <= 1/2 (the wires are symmetric in S), truncated at |N| = Nmax.
// Cells are tensor-product and graded towards wire edges and tips.
// Dirichlet wires enter through cut-face distances (exact for slits and
// squares, which the grid resolves; Shortley-Weller style for disks).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cell_types.hpp"
#include "errors.hpp"
#include "geometry.hpp"

namespace cagecalc {

struct StripGridSpec {
    double Nmax = 4.0;
    int base = 12;      ///< cells per grid interval on the coarsest level
    int levels = 3;     ///< number of successive halvings
    double grading = 3.0;
    double tol = 1e-3;  ///< accepted change of the extrapolated constants
};

namespace detail {

struct Interval {
    double a, b;
    bool gradeA, gradeB;
};

inline double grade_sym(double t, double q)
{
    double x = std::pow(t, q), y = std::pow(1.0 - t, q);
    return x / (x + y);
}

inline std::vector<double> graded_faces(const std::vector<Interval>& iv, int cells, double q)
{
    std::vector<double> f{iv.front().a};
    for (const Interval& I : iv) {
        for (int i = 1; i <= cells; ++i) {
            double t = static_cast<double>(i) / cells, g;
            if (I.gradeA && I.gradeB) g = grade_sym(t, q);
            else if (I.gradeA) g = 2.0 * grade_sym(0.5 * t, q);
            else if (I.gradeB) g = 1.0 - 2.0 * grade_sym(0.5 * (1.0 - t), q);
            else g = t;
            f.push_back(i == cells ? I.b : I.a + (I.b - I.a) * g);
        }
    }
    return f;
}

/// Wire description in cell coordinates, restricted to the half strip.
struct StripWire {
    WireShape shape;
    double delta;
    double half; ///< half side for squares

    bool solid(double N, double S) const
    {
        switch (shape) {
        case WireShape::Square: return std::abs(N) < half && S < half;
        case WireShape::Disk: return N * N + S * S < delta * delta;
        default: return false;
        }
    }

    /// Distance from (N0,S0) towards (N1,S1) to the first wire point, if
    /// the segment meets the wire before reaching (N1,S1).
    std::optional<double> crossing(double N0, double S0, double N1, double S1) const
    {
        double len = std::hypot(N1 - N0, S1 - S0);
        switch (shape) {
        case WireShape::TangentialSegment:
            if (S0 == S1 && S0 < delta && ((N0 < 0) != (N1 < 0))) return std::abs(N0);
            return std::nullopt;
        case WireShape::PerpendicularSegment: return std::nullopt;
        case WireShape::Square:
            if (!solid(N1, S1)) return std::nullopt;
            if (S0 == S1) return std::abs(std::abs(N0) - half);
            return std::abs(S0 - half);
        case WireShape::Disk: {
            if (!solid(N1, S1)) return std::nullopt;
            // |p + t (q - p)| = delta for the first root t in (0, 1]
            double dx = N1 - N0, dy = S1 - S0;
            double a = dx * dx + dy * dy, b = 2 * (N0 * dx + S0 * dy), c = N0 * N0 + S0 * S0 - delta * delta;
            double disc = std::max(b * b - 4 * a * c, 0.0);
            double t = (-b - std::sqrt(disc)) / (2 * a);
            t = std::clamp(t, 1e-3, 1.0);
            return t * len;
        }
        }
        return std::nullopt;
    }

    /// Dirichlet condition on the symmetry line S = 0 (perpendicular slit).
    bool bottom_dirichlet(double N) const
    {
        return shape == WireShape::PerpendicularSegment && std::abs(N) < delta;
    }

    std::vector<Interval> intervalsN(double Nmax, bool halfDomain) const
    {
        std::vector<double> bp;
        switch (shape) {
        case WireShape::TangentialSegment: bp = {0.0}; break;
        case WireShape::PerpendicularSegment: bp = {-delta, delta}; break;
        case WireShape::Square: bp = {-half, half}; break;
        case WireShape::Disk: bp = {-delta, delta}; break;
        }
        std::vector<double> pts{-Nmax};
        for (double x : bp)
            if (!halfDomain || x > 0) pts.push_back(x);
        pts.push_back(Nmax);
        if (halfDomain) pts[0] = 0.0;
        std::vector<Interval> iv;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            bool ga = i > 0 || (halfDomain && shape == WireShape::TangentialSegment);
            bool gb = i + 2 < pts.size();
            if (shape == WireShape::Disk) ga = gb = false;
            iv.push_back({pts[i], pts[i + 1], ga, gb});
        }
        return iv;
    }

    std::vector<Interval> intervalsS() const
    {
        switch (shape) {
        case WireShape::TangentialSegment: return {{0.0, delta, false, true}, {delta, 0.5, true, false}};
        case WireShape::PerpendicularSegment: return {{0.0, 0.5, true, false}};
        case WireShape::Square: return {{0.0, half, false, true}, {half, 0.5, true, false}};
        case WireShape::Disk: return {{0.0, 0.5, false, false}};
        }
        return {};
    }
};

enum class StripKind { DirichletPlus, NeumannOdd };

struct StripLevel {
    std::vector<double> fN, fS; ///< face coordinates
    std::vector<double> cN, cS; ///< centres
    Eigen::MatrixXd u;          ///< u(j, i), NaN in the wire
    double sigma = 0.0, tau = 0.0, lambda = 0.0, hmax = 0.0;
};

inline std::vector<double> centres(const std::vector<double>& f)
{
    std::vector<double> c;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) c.push_back(0.5 * (f[i] + f[i + 1]));
    return c;
}

inline StripLevel solve_strip_level(const StripWire& w, StripKind kind, double Nmax, int cells, double q)
{
    bool half = kind == StripKind::NeumannOdd;
    StripLevel L;
    // coarser cells in the long outer intervals
    auto ivN = w.intervalsN(Nmax, half);
    L.fN = {ivN.front().a};
    for (const Interval& I : ivN) {
        int n = (I.b - I.a > 1.0) ? std::max(4, static_cast<int>(std::lround(cells * std::sqrt(I.b - I.a)))) : cells;
        auto f = graded_faces({I}, n, q);
        L.fN.insert(L.fN.end(), f.begin() + 1, f.end());
    }
    L.fS = graded_faces(w.intervalsS(), cells, q);
    L.cN = centres(L.fN);
    L.cS = centres(L.fS);
    const int nx = static_cast<int>(L.cN.size()), ny = static_cast<int>(L.cS.size());
    for (std::size_t i = 0; i + 1 < L.fN.size(); ++i) L.hmax = std::max(L.hmax, L.fN[i + 1] - L.fN[i]);
    for (std::size_t j = 0; j + 1 < L.fS.size(); ++j) L.hmax = std::max(L.hmax, L.fS[j + 1] - L.fS[j]);

    std::vector<int> idx(static_cast<std::size_t>(nx) * ny, -1);
    int nu = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (!w.solid(L.cN[i], L.cS[j])) idx[j * nx + i] = nu++;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nu) * 5);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
    const bool dir = kind == StripKind::DirichletPlus;

    for (int j = 0; j < ny; ++j) {
        double dS = L.fS[j + 1] - L.fS[j];
        for (int i = 0; i < nx; ++i) {
            int r = idx[j * nx + i];
            if (r < 0) continue;
            double dN = L.fN[i + 1] - L.fN[i];
            double diag = 0.0;
            auto link = [&](int ii, int jj, double faceLen) {
                int c = idx[jj * nx + ii];
                double N0 = L.cN[i], S0 = L.cS[j], N1 = L.cN[ii], S1 = L.cS[jj];
                auto hit = w.crossing(N0, S0, N1, S1);
                if (hit || c < 0) {
                    if (dir) diag += faceLen / std::max(hit.value_or(std::hypot(N1 - N0, S1 - S0) * 0.5), 1e-14);
                    return;
                }
                double wgt = faceLen / std::hypot(N1 - N0, S1 - S0);
                diag += wgt;
                trip.emplace_back(r, c, -wgt);
            };
            // N direction
            if (i > 0) link(i - 1, j, dS);
            else if (half) {
                bool blocked = w.shape == WireShape::TangentialSegment && L.cS[j] < w.delta;
                if (!blocked) diag += dS / (0.5 * dN);
            }
            if (i < nx - 1) link(i + 1, j, dS);
            else rhs(r) += dS; // dPhi/dN = 1 at N = Nmax
            // S direction
            if (j > 0) link(i, j - 1, dN);
            else if (dir && w.bottom_dirichlet(L.cN[i])) diag += dN / (0.5 * dS);
            if (j < ny - 1) link(i, j + 1, dN);
            trip.emplace_back(r, r, diag);
        }
    }
    Eigen::SparseMatrix<double> A(nu, nu);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "strip factorisation failed");
    Eigen::VectorXd x = solver.solve(rhs);

    L.u = Eigen::MatrixXd::Constant(ny, nx, std::numeric_limits<double>::quiet_NaN());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (idx[j * nx + i] >= 0) L.u(j, i) = x(idx[j * nx + i]);
    auto avg = [&](int i) {
        double s = 0.0;
        for (int j = 0; j < ny; ++j) s += (L.fS[j + 1] - L.fS[j]) * L.u(j, i);
        return 2.0 * s;
    };
    // the S-average is exactly linear between the wire and the ends
    double right = avg(nx - 1) - L.cN[nx - 1];
    if (dir) {
        L.sigma = right;
        L.tau = avg(0);
    } else {
        L.lambda = right;
    }
    return L;
}

struct Extrapolated {
    double value = 0.0;
    double order = 0.0;
    double change = 0.0; ///< |extrapolated - finest|
};

/// Richardson extrapolation from values on successively halved grids,
/// estimating the order from the last three.
inline Extrapolated richardson(const std::vector<double>& v)
{
    Extrapolated e;
    std::size_t n = v.size();
    if (n == 1) {
        e.value = v[0];
        return e;
    }
    double p = 2.0;
    if (n >= 3) {
        double d1 = v[n - 2] - v[n - 3], d2 = v[n - 1] - v[n - 2];
        if (d2 != 0.0 && d1 / d2 > 1.0) p = std::clamp(std::log2(d1 / d2), 0.5, 4.0);
    }
    e.order = p;
    e.value = v[n - 1] + (v[n - 1] - v[n - 2]) / (std::pow(2.0, p) - 1.0);
    e.change = std::abs(e.value - v[n - 1]);
    return e;
}

} // namespace detail

struct StripResult {
    CellSolution solution; ///< finest level, full strip
    std::vector<double> sigmaLevels, tauLevels, lambdaLevels;
    double sigma = 0.0, tau = 0.0, lambda = 0.0;
    double order = 0.0;
    double change = 0.0;
};

namespace detail {

inline CellSolution full_strip(const StripWire& w, const StripLevel& L, StripKind kind, double Nmax)
{
    CellSolution c;
    c.shape = w.shape;
    c.delta = w.delta;
    c.Nmax = Nmax;
    c.h = L.hmax;
    c.bc = kind == StripKind::DirichletPlus ? BoundaryCondition::Dirichlet : BoundaryCondition::Neumann;
    const int nx = static_cast<int>(L.cN.size()), ny = static_cast<int>(L.cS.size());
    // reflect in S, and in N (odd) for the half-domain Neumann problem
    std::vector<int> colSrc;
    std::vector<double> colSign;
    if (kind == StripKind::NeumannOdd) {
        for (int i = nx - 1; i >= 0; --i) {
            c.N.push_back(-L.cN[i]);
            colSrc.push_back(i);
            colSign.push_back(-1.0);
        }
    }
    for (int i = 0; i < nx; ++i) {
        c.N.push_back(L.cN[i]);
        colSrc.push_back(i);
        colSign.push_back(1.0);
    }
    std::vector<int> rowSrc;
    for (int j = ny - 1; j >= 0; --j) {
        c.S.push_back(-L.cS[j]);
        rowSrc.push_back(j);
        c.weightS.push_back(L.fS[j + 1] - L.fS[j]);
    }
    for (int j = 0; j < ny; ++j) {
        c.S.push_back(L.cS[j]);
        rowSrc.push_back(j);
        c.weightS.push_back(L.fS[j + 1] - L.fS[j]);
    }
    c.values.resize(static_cast<Eigen::Index>(c.S.size()), static_cast<Eigen::Index>(c.N.size()));
    for (std::size_t r = 0; r < c.S.size(); ++r)
        for (std::size_t q = 0; q < c.N.size(); ++q)
            c.values(r, q) = colSign[q] * L.u(rowSrc[r], colSrc[q]);
    return c;
}

inline StripResult strip_solve(WireShape shape, double delta, const StripGridSpec& spec, StripKind kind)
{
    if (!(delta > 0.0)) throw Error(ErrorKind::DomainError, "delta must be positive", delta);
    if (delta >= delta_max(shape)) throw Error(ErrorKind::WireOverlap, "delta >= delta_max", delta);
    if (shape == WireShape::PerpendicularSegment && delta >= spec.Nmax - 1.0)
        throw Error(ErrorKind::DomainError, "perpendicular slit longer than the strip window", delta);
    if (kind == StripKind::NeumannOdd && shape == WireShape::Disk)
        throw Error(ErrorKind::NotImplemented, "staircase Neumann disks are not supported; use the multipole solver");
    StripWire w{shape, delta, delta / std::sqrt(2.0)};
    StripResult res;
    StripLevel last;
    for (int l = 0; l < spec.levels; ++l) {
        last = solve_strip_level(w, kind, spec.Nmax, spec.base << l, spec.grading);
        res.sigmaLevels.push_back(last.sigma);
        res.tauLevels.push_back(last.tau);
        res.lambdaLevels.push_back(last.lambda);
    }
    res.solution = full_strip(w, last, kind, spec.Nmax);
    if (kind == StripKind::DirichletPlus) {
        auto s = richardson(res.sigmaLevels), t = richardson(res.tauLevels);
        res.sigma = s.value;
        res.tau = t.value;
        res.order = s.order;
        res.change = std::max(s.change, t.change);
    } else {
        auto s = richardson(res.lambdaLevels);
        res.lambda = s.value;
        res.order = s.order;
        res.change = s.change;
    }
    if (res.change > spec.tol)
        throw Error(ErrorKind::NoConvergence, "extrapolated constants still moving", res.change);
    return res;
}

} // namespace detail

/// Phi^+ on the strip: N + sigma as N -> +inf, tau as N -> -inf.
inline StripResult strip_dirichlet(WireShape shape, double delta, const StripGridSpec& spec = {})
{
    return detail::strip_solve(shape, delta, spec, detail::StripKind::DirichletPlus);
}

/// Psi on the strip: N +- lambda as N -> +-inf (odd in N).
inline StripResult strip_neumann(WireShape shape, double delta, const StripGridSpec& spec = {})
{
    return detail::strip_solve(shape, delta, spec, detail::StripKind::NeumannOdd);
}

} // namespace cagecalc
