#pragma once

// Many-wire reference solver: per-wire multipole expansions fitted by least
// squares at collocation points on the wire boundaries. The rotational
// symmetry of the cage makes the collocation matrix block circulant, so it
// is solved one Fourier block at a time.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace cagecalc {

/// Laplace behaviour at infinity. ZeroNetCharge leaves phi ~ -(1/2 pi) log|z|
/// plus a constant; Grounded makes the wires absorb the source charge so phi
/// stays bounded (the symmetric Dirichlet Green function).
enum class LaplaceFarField { ZeroNetCharge, Grounded };

struct DiscreteOptions {
    int P = 10;       ///< multipole order per wire
    int C = 0;        ///< collocation points per wire; 0 means 3(2P+1)
    bool useSymmetry = true;
    double maxCondition = 1e15;
    LaplaceFarField farField = LaplaceFarField::ZeroNetCharge;
};

struct ResidualStats {
    double max = 0.0;
    double rms = 0.0;
};

struct DiscreteSolution {
    Equation equation = Equation::Laplace;
    double k = 0.0;
    CageGeometry geometry;
    cplx z0{2.0, 0.0};
    double strength = 1.0;
    int P = 0, C = 0;
    int symmetryOrder = 1;
    /// coeffs[j][n + P] multiplies the order-n basis function of wire j
    std::vector<std::vector<cplx>> coeffs;
    cplx constant = 0.0; ///< Laplace additive constant
    ResidualStats collocation;
    double condition = 0.0; ///< largest per-block estimate, column-scaled
};

namespace detail {

/// Values of every basis function of wire j at z (length 2P+1).
inline void wire_basis(Equation eq, double k, cplx zc, double theta, double r, int P, cplx z,
                       std::vector<cplx>& out, const std::vector<double>& hankelNorm)
{
    out.assign(2 * P + 1, 0.0);
    cplx d = z - zc;
    double rho = std::abs(d);
    double phi = std::arg(d) - theta;
    if (eq == Equation::Laplace) {
        out[P] = std::log(rho / r);
        double q = r / rho, p = 1.0;
        for (int n = 1; n <= P; ++n) {
            p *= q;
            cplx e = std::polar(p, n * phi);
            out[P + n] = e;
            out[P - n] = std::conj(e);
        }
    } else {
        std::vector<cplx> h = hankel1_sequence(P, k * rho);
        out[P] = h[0] / hankelNorm[0];
        for (int n = 1; n <= P; ++n) {
            cplx v = h[n] / hankelNorm[n];
            out[P + n] = v * std::polar(1.0, n * phi);
            out[P - n] = v * std::polar(1.0, -n * phi);
        }
    }
}

/// Gradient (d/dx, d/dy) of every basis function of wire j at z.
inline void wire_basis_gradient(Equation eq, double k, cplx zc, double theta, double r, int P, cplx z,
                                std::vector<cplx>& gx, std::vector<cplx>& gy,
                                const std::vector<double>& hankelNorm)
{
    gx.assign(2 * P + 1, 0.0);
    gy.assign(2 * P + 1, 0.0);
    cplx d = z - zc;
    double rho = std::abs(d);
    double ang = std::arg(d);
    double c = std::cos(ang), s = std::sin(ang);
    double phi = ang - theta;
    auto put = [&](int idx, cplx dr, cplx dphi) {
        gx[idx] = c * dr - s / rho * dphi;
        gy[idx] = s * dr + c / rho * dphi;
    };
    if (eq == Equation::Laplace) {
        put(P, 1.0 / rho, 0.0);
        for (int n = 1; n <= P; ++n) {
            double R = std::pow(r / rho, n);
            for (int sg : {1, -1}) {
                cplx e = R * std::polar(1.0, sg * n * phi);
                put(P + sg * n, -n / rho * e, I * double(sg * n) * e);
            }
        }
    } else {
        std::vector<cplx> h = hankel1_sequence(P + 1, k * rho);
        // H_n' = H_{n-1} - (n/x) H_n, H_0' = -H_1
        put(P, -k * h[1] / hankelNorm[0], 0.0);
        for (int n = 1; n <= P; ++n) {
            cplx hp = h[n - 1] - (n / (k * rho)) * h[n];
            for (int sg : {1, -1}) {
                cplx e = std::polar(1.0, sg * n * phi);
                put(P + sg * n, k * hp / hankelNorm[n] * e, I * double(sg * n) * h[n] / hankelNorm[n] * e);
            }
        }
    }
}

inline std::vector<double> hankel_norms(Equation eq, double k, double r, int P)
{
    std::vector<double> nrm(P + 1, 1.0);
    if (eq == Equation::Helmholtz) {
        std::vector<cplx> h = hankel1_sequence(P, k * r);
        for (int n = 0; n <= P; ++n) {
            nrm[n] = std::abs(h[n]);
            if (!std::isfinite(nrm[n]) || nrm[n] == 0.0)
                throw Error(ErrorKind::NearSingularBasis, "Hankel basis overflows at k r", k * r, n);
        }
    }
    return nrm;
}

/// Order of the rotation group used to block-diagonalize the collocation matrix.
inline int symmetry_order(const CageGeometry& g, bool use)
{
    if (!use || g.M() == 0) return 1;
    if (g.config.curve == Curve::UnitCircle) return g.M();
    if (g.config.curve == Curve::UnitSquare && g.M() % 4 == 0) return 4;
    return 1;
}

} // namespace detail

/// Free field of the source f = -strength * delta_{z0}.
inline cplx free_field(Equation eq, double k, cplx z0, cplx z, double strength = 1.0)
{
    double d = std::abs(z - z0);
    if (eq == Equation::Laplace) return -strength * std::log(d) / (2 * pi);
    return strength * 0.25 * I * hankel1(0, k * d);
}

inline std::array<cplx, 2> free_field_gradient(Equation eq, double k, cplx z0, cplx z, double strength = 1.0)
{
    cplx v = z - z0;
    double d = std::abs(v);
    cplx dr = eq == Equation::Laplace ? cplx(-strength / (2 * pi * d)) : -strength * 0.25 * I * k * hankel1(1, k * d);
    return {dr * v.real() / d, dr * v.imag() / d};
}

inline void check_outside_wires(const CageGeometry& g, cplx z)
{
    for (int j = 0; j < g.M(); ++j)
        if (std::abs(z - g.centers[j]) < g.wireRadius * (1.0 - 1e-12))
            throw Error(ErrorKind::InsideWire, "point lies inside a wire", std::abs(z - g.centers[j]), j);
}

/// Collocation solve. The Laplace solution carries zero net log charge on
/// the wires plus one free additive constant.
inline DiscreteSolution solve_discrete(Equation eq, const CageGeometry& geom, double k, cplx z0,
                                       const DiscreteOptions& opt = {}, double strength = 1.0)
{
    if (eq == Equation::Helmholtz && !(k > 0.0)) throw Error(ErrorKind::DomainError, "k must be positive", k);
    if (opt.P < 0) throw Error(ErrorKind::DomainError, "P must be nonnegative", opt.P);
    DiscreteSolution sol;
    sol.equation = eq;
    sol.k = k;
    sol.geometry = geom;
    sol.z0 = z0;
    sol.strength = strength;
    sol.P = opt.P;
    sol.C = opt.C > 0 ? opt.C : 3 * (2 * opt.P + 1);
    const int M = geom.M();
    if (M == 0) return sol;
    if (geom.config.wireShape != WireShape::Disk)
        throw Error(ErrorKind::NotImplemented, "the discrete solver handles disk wires only");
    if (sol.C < 2 * opt.P + 1) throw Error(ErrorKind::DomainError, "need C >= 2P+1 collocation points", sol.C);
    if (geom.config.delta >= 0.5) throw Error(ErrorKind::WireOverlap, "disks touch or overlap", geom.config.delta);
    check_outside_wires(geom, z0);

    const int P = opt.P, C = sol.C, nb = 2 * P + 1;
    const int G = detail::symmetry_order(geom, opt.useSymmetry);
    const int B = M / G;
    sol.symmetryOrder = G;
    const double r = geom.wireRadius;
    const cplx omega = std::polar(1.0, 2 * pi / G);
    const auto hn = detail::hankel_norms(eq, k, r, P);

    // base wires b = 0..B-1; wire h*B + b is base wire b rotated by omega^h
    std::vector<std::vector<cplx>> pts(B);
    for (int b = 0; b < B; ++b) pts[b] = wire_boundary(geom, b, C);

    const int rows = B * C, cols = B * nb;
    std::vector<Eigen::MatrixXcd> Ad(G, Eigen::MatrixXcd(rows, cols));
    std::vector<Eigen::VectorXcd> fd(G, Eigen::VectorXcd(rows));
    std::vector<cplx> vals;
    for (int d = 0; d < G; ++d) {
        cplx rot = std::pow(omega, d);
        for (int bp = 0; bp < B; ++bp)
            for (int c = 0; c < C; ++c) {
                cplx x = rot * pts[bp][c];
                int row = bp * C + c;
                fd[d](row) = -free_field(eq, k, z0, x, strength);
                for (int b = 0; b < B; ++b) {
                    detail::wire_basis(eq, k, geom.centers[b], geom.normalAngles[b], r, P, x, vals, hn);
                    for (int n = 0; n < nb; ++n) Ad[d](row, b * nb + n) = vals[n];
                }
            }
    }

    // Fourier blocks
    std::vector<Eigen::VectorXcd> chat(G);
    std::vector<Eigen::VectorXcd> rhat(G);
    for (int q = 0; q < G; ++q) {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(rows, cols);
        Eigen::VectorXcd f = Eigen::VectorXcd::Zero(rows);
        for (int d = 0; d < G; ++d) {
            cplx w = std::polar(1.0, -2 * pi * double(q) * d / G);
            A += w * Ad[d];
            f += w * fd[d];
        }
        // Laplace q = 0: fix the total log charge and append the constant
        bool constrained = eq == Equation::Laplace && q == 0;
        const double total = opt.farField == LaplaceFarField::Grounded ? strength / (2 * pi) : 0.0;
        Eigen::MatrixXcd Aw = A;
        if (constrained) {
            int last = (B - 1) * nb + P;
            f -= total * A.col(last);
            for (int b = 0; b < B - 1; ++b) Aw.col(b * nb + P) -= A.col(last);
            Eigen::MatrixXcd tmp(rows, cols);
            tmp.leftCols(last) = Aw.leftCols(last);
            tmp.middleCols(last, cols - last - 1) = Aw.rightCols(cols - last - 1);
            tmp.col(cols - 1).setConstant(double(G));
            Aw = tmp;
        }
        Eigen::VectorXd scale = Aw.colwise().norm().transpose();
        for (Eigen::Index j = 0; j < Aw.cols(); ++j) {
            if (scale(j) == 0.0) scale(j) = 1.0;
            Aw.col(j) /= scale(j);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(Aw);
        auto Rdiag = qr.matrixQR().diagonal().cwiseAbs();
        double cond = Rdiag.maxCoeff() / std::max(Rdiag.minCoeff(), 1e-300);
        sol.condition = std::max(sol.condition, cond);
        if (cond > opt.maxCondition)
            throw Error(ErrorKind::IllConditioned, "collocation block is ill-conditioned", cond, q);
        Eigen::VectorXcd x = qr.solve(f);
        rhat[q] = Aw * x - f;
        x = x.cwiseQuotient(scale.cast<cplx>());
        Eigen::VectorXcd full(cols);
        if (constrained) {
            int last = (B - 1) * nb + P;
            full.head(last) = x.head(last);
            full.segment(last + 1, cols - last - 1) = x.segment(last, cols - last - 1);
            cplx s = 0.0;
            for (int b = 0; b < B - 1; ++b) s += x(b * nb + P);
            full(last) = total - s;
            sol.constant = x(cols - 1);
        } else {
            full = x;
        }
        chat[q] = full;
    }

    // back to wire coefficients and collocation residuals
    sol.coeffs.assign(M, std::vector<cplx>(nb, 0.0));
    double sumsq = 0.0;
    for (int h = 0; h < G; ++h) {
        Eigen::VectorXcd ch = Eigen::VectorXcd::Zero(cols);
        Eigen::VectorXcd rh = Eigen::VectorXcd::Zero(rows);
        for (int q = 0; q < G; ++q) {
            cplx w = std::polar(1.0 / G, 2 * pi * double(q) * h / G);
            ch += w * chat[q];
            rh += w * rhat[q];
        }
        for (int b = 0; b < B; ++b)
            for (int n = 0; n < nb; ++n) sol.coeffs[h * B + b][n] = ch(b * nb + n);
        sol.collocation.max = std::max(sol.collocation.max, rh.cwiseAbs().maxCoeff());
        sumsq += rh.squaredNorm();
    }
    sol.collocation.rms = std::sqrt(sumsq / (double(M) * C));
    return sol;
}

inline DiscreteSolution solve_laplace(const CageGeometry& geom, cplx z0, const DiscreteOptions& opt = {})
{
    return solve_discrete(Equation::Laplace, geom, 0.0, z0, opt);
}

inline DiscreteSolution solve_helmholtz(const CageGeometry& geom, double k, cplx z0, const DiscreteOptions& opt = {})
{
    return solve_discrete(Equation::Helmholtz, geom, k, z0, opt);
}

inline cplx evaluate(const DiscreteSolution& sol, cplx z)
{
    const auto& g = sol.geometry;
    check_outside_wires(g, z);
    cplx v = free_field(sol.equation, sol.k, sol.z0, z, sol.strength) + sol.constant;
    if (g.M() == 0) return v;
    auto hn = detail::hankel_norms(sol.equation, sol.k, g.wireRadius, sol.P);
    std::vector<cplx> vals;
    for (int j = 0; j < g.M(); ++j) {
        detail::wire_basis(sol.equation, sol.k, g.centers[j], g.normalAngles[j], g.wireRadius, sol.P, z, vals, hn);
        for (std::size_t n = 0; n < vals.size(); ++n) v += sol.coeffs[j][n] * vals[n];
    }
    return v;
}

/// (d phi/dx, d phi/dy), complex for Helmholtz.
inline std::array<cplx, 2> evaluate_gradient(const DiscreteSolution& sol, cplx z)
{
    const auto& g = sol.geometry;
    check_outside_wires(g, z);
    auto gr = free_field_gradient(sol.equation, sol.k, sol.z0, z, sol.strength);
    if (g.M() == 0) return gr;
    auto hn = detail::hankel_norms(sol.equation, sol.k, g.wireRadius, sol.P);
    std::vector<cplx> gx, gy;
    for (int j = 0; j < g.M(); ++j) {
        detail::wire_basis_gradient(sol.equation, sol.k, g.centers[j], g.normalAngles[j], g.wireRadius, sol.P, z, gx,
                                    gy, hn);
        for (std::size_t n = 0; n < gx.size(); ++n) {
            gr[0] += sol.coeffs[j][n] * gx[n];
            gr[1] += sol.coeffs[j][n] * gy[n];
        }
    }
    return gr;
}

inline double gradient_magnitude(const std::array<cplx, 2>& g)
{
    return std::sqrt(std::norm(g[0]) + std::norm(g[1]));
}

/// |phi| at 4C points per wire placed halfway between refined collocation angles.
inline ResidualStats boundary_residual(const DiscreteSolution& sol)
{
    ResidualStats st;
    const auto& g = sol.geometry;
    if (g.M() == 0) return st;
    const int n = 4 * sol.C;
    const auto hn = detail::hankel_norms(sol.equation, sol.k, g.wireRadius, sol.P);
    std::vector<cplx> vals;
    double sumsq = 0.0;
    for (int j = 0; j < g.M(); ++j) {
        for (int t = 0; t < n; ++t) {
            double a = 2 * pi * (t + 0.5) / n;
            cplx p = std::polar(1.0, a);
            cplx z = g.config.wireModel == WireModel::Model1
                         ? g.centers[j] + std::polar(1.0, g.normalAngles[j]) * (g.wireRadius * p)
                         : curvilinear_map(g.config.curve, g.wireRadius * p.real(),
                                           g.arcPositions[j] + g.wireRadius * p.imag());
            // no inside-wire test: Model 2 points sit marginally inside the disk
            cplx v = free_field(sol.equation, sol.k, sol.z0, z, sol.strength) + sol.constant;
            for (int i = 0; i < g.M(); ++i) {
                detail::wire_basis(sol.equation, sol.k, g.centers[i], g.normalAngles[i], g.wireRadius, sol.P, z, vals,
                                   hn);
                for (std::size_t m = 0; m < vals.size(); ++m) v += sol.coeffs[i][m] * vals[m];
            }
            double e = std::abs(v);
            st.max = std::max(st.max, e);
            sumsq += e * e;
        }
    }
    st.rms = std::sqrt(sumsq / (double(g.M()) * n));
    return st;
}

} // namespace cagecalc
