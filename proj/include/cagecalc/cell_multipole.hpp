#pragma once

// Periodic multipole solutions of the disk cell problems. On the strip
// Z = N + iS (period one in S) the singular basis is
//   f_1 = pi coth(pi Z),  f_n = sum_m (Z - im)^{-n},  f_n' = -n f_{n+1},
// scaled as b_n = delta^n f_n so that |b_n| = O(1) on the wire.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/zeta.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace cagecalc {

class PeriodicDiskBasis {
public:
    PeriodicDiskBasis(double delta, int nmax) : delta_(delta), nmax_(nmax)
    {
        if (!(delta > 0.0 && delta <= 0.5))
            throw Error(ErrorKind::DomainError, "disk cell needs 0 < delta <= 1/2", delta);
        // Taylor part of f_n about Z = 0, stored in w = Z/delta
        const double rho = std::max(delta, 0.75);
        coef_.resize(nmax + 1);
        for (int n = 1; n <= nmax; ++n) {
            std::vector<double>& c = coef_[n];
            double peak = -1e300;
            for (int k = 0; k < 6000; ++k) {
                int p = n + k;
                double lbin = std::lgamma(n + k) - std::lgamma(k + 1) - std::lgamma(n);
                double lbound = std::log(2.2) + lbin + n * std::log(delta) + k * std::log(rho);
                peak = std::max(peak, lbound);
                if (p % 2 == 0 && p >= 2) {
                    double T = ((p / 2) % 2 ? -2.0 : 2.0) * boost::math::zeta(static_cast<double>(p));
                    double sgn = (n % 2 ? -1.0 : 1.0);
                    double mag = std::exp(lbin + (n + k) * std::log(delta));
                    c.push_back(sgn * T * mag);
                } else {
                    c.push_back(0.0);
                }
                if (k > n + 8 && lbound < std::min(peak, 0.0) - 46.0) break;
            }
        }
    }

    double delta() const { return delta_; }
    int nmax() const { return nmax_; }

    /// b_1..b_nmax at Z (index n-1). Z is reduced into |S| <= 1/2 first.
    void eval(cplx Z, std::vector<cplx>& b) const
    {
        b.assign(nmax_, cplx(0.0));
        double S = Z.imag() - std::round(Z.imag());
        Z = cplx(Z.real(), S);
        if (std::abs(Z.real()) < 0.5) {
            near(Z, b);
        } else {
            far(Z, b);
        }
    }

    /// Analytic g with Re g = G = (1/2pi) log|2 sinh pi Z|; returns (G, g').
    static std::pair<double, cplx> green(cplx Z)
    {
        double N = Z.real();
        double sgn = N >= 0 ? 1.0 : -1.0;
        // log|2 sinh pi Z| = pi|N| + log|1 - e^{-2 pi sgn Z}|
        cplx e = std::exp(-2.0 * pi * sgn * Z);
        double G = (pi * std::abs(N) + std::log(std::abs(1.0 - e))) / (2.0 * pi);
        cplx gp = 0.5 / std::tanh(pi * Z);
        return {G, gp};
    }

private:
    void near(cplx Z, std::vector<cplx>& b) const
    {
        cplx w = Z / delta_;
        cplx winv = 1.0 / w;
        cplx wn = 1.0;
        for (int n = 1; n <= nmax_; ++n) {
            wn *= winv;
            const std::vector<double>& c = coef_[n];
            cplx s = 0.0;
            for (std::size_t k = c.size(); k-- > 0;) s = s * w + c[k];
            b[n - 1] = wn + s;
        }
        b[0] = delta_ * pi / std::tanh(pi * Z);
    }

    void far(cplx Z, std::vector<cplx>& b) const
    {
        double sgn = Z.real() > 0 ? 1.0 : -1.0;
        cplx Zp = sgn * Z; // f_n(-Z) = (-1)^n f_n(Z)
        double N = Zp.real();
        b[0] = delta_ * pi / std::tanh(pi * Z);
        for (int n = 2; n <= nmax_; ++n) {
            double lpre = n * std::log(2.0 * pi * delta_) - std::lgamma(n);
            cplx s = 0.0;
            double best = -1e300;
            for (int j = 1; j < 100000; ++j) {
                double lt = lpre + (n - 1) * std::log(static_cast<double>(j)) - 2.0 * pi * j * N;
                best = std::max(best, lt);
                s += std::exp(lt) * std::polar(1.0, -2.0 * pi * j * Zp.imag());
                if (j > (n - 1) / (2.0 * pi * N) + 1 && lt < best - 46.0) break;
            }
            b[n - 1] = (n % 2 && sgn < 0) ? -s : s;
        }
    }

    double delta_;
    int nmax_;
    std::vector<std::vector<double>> coef_;
};

/// Harmonic field on the strip with a disk hole:
///   u = lin N + c0 + g G(Z) + sum_n Re(a_n b_n(Z)),
/// optionally plus the particular term -1/2 N^2 d(base)/dN.
struct StripHarmonic {
    double delta = 0.0;
    double lin = 0.0;
    double c0 = 0.0;
    double g = 0.0;
    std::vector<cplx> a;

    /// returns complex derivative F' so that grad u = (Re F', -Im F')
    cplx derivative(const PeriodicDiskBasis& B, cplx Z, std::vector<cplx>& tmp) const
    {
        B.eval(Z, tmp);
        cplx F = lin + g * PeriodicDiskBasis::green(Z).second;
        for (std::size_t n = 1; n <= a.size(); ++n) F += a[n - 1] * (-(double(n) / delta) * tmp[n]);
        return F;
    }

    double value(const PeriodicDiskBasis& B, cplx Z, std::vector<cplx>& tmp) const
    {
        B.eval(Z, tmp);
        double u = lin * Z.real() + c0 + g * PeriodicDiskBasis::green(Z).first;
        for (std::size_t n = 1; n <= a.size(); ++n) u += (a[n - 1] * tmp[n - 1]).real();
        return u;
    }
};

inline int default_disk_order(double delta)
{
    if (delta <= 0.25) return 24;
    if (delta <= 0.4) return 60;
    return 120;
}

namespace detail {

struct DiskBoundary {
    std::vector<double> theta;
    std::vector<cplx> Z, nu;
    std::vector<std::vector<cplx>> b; ///< b[i][n-1], n = 1..P+2
};

inline DiskBoundary disk_boundary(const PeriodicDiskBasis& B, int C)
{
    DiskBoundary d;
    double delta = B.delta();
    for (int i = 0; i < C; ++i) {
        double th = 2.0 * pi * (i + 0.5) / C;
        cplx nu = std::polar(1.0, th);
        d.theta.push_back(th);
        d.nu.push_back(nu);
        d.Z.push_back(delta * nu);
        std::vector<cplx> v;
        B.eval(delta * nu, v);
        d.b.push_back(v);
    }
    return d;
}

/// b_n' and b_n'' from the recurrence f_n' = -n f_{n+1}
inline cplx bprime(const std::vector<cplx>& b, int n, double delta) { return -(double(n) / delta) * b[n]; }
inline cplx bsecond(const std::vector<cplx>& b, int n, double delta)
{
    return (double(n) * (n + 1) / (delta * delta)) * b[n + 1];
}

/// Real least squares with unknown multipole coefficients appended after
/// `lead` leading columns. Row values: Re(coef_n * conj-free combination).
inline Eigen::VectorXd solve_real(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs)
{
    return lstsq<double>(A, rhs, RankPolicy::MinimumNorm, 1e-14).x;
}

} // namespace detail

struct DiskDirichletResult {
    StripHarmonic phi; ///< Phi^+
    double sigma = 0.0, tau = 0.0, residual = 0.0;
};

/// Phi^+ = N/2 + c0 + G + sum Re(a_n b_n), zero on the disk of radius delta.
inline DiskDirichletResult disk_dirichlet(double delta, int P = 0)
{
    if (P <= 0) P = default_disk_order(delta);
    int C = 4 * P + 8;
    PeriodicDiskBasis B(delta, P + 2);
    auto bd = detail::disk_boundary(B, C);
    Eigen::MatrixXd A(C, 1 + 2 * P);
    Eigen::VectorXd rhs(C);
    for (int i = 0; i < C; ++i) {
        cplx Z = bd.Z[i];
        A(i, 0) = 1.0;
        rhs(i) = -(0.5 * Z.real() + PeriodicDiskBasis::green(Z).first);
        for (int n = 1; n <= P; ++n) {
            A(i, 2 * n - 1) = bd.b[i][n - 1].real();
            A(i, 2 * n) = -bd.b[i][n - 1].imag();
        }
    }
    Eigen::VectorXd x = detail::solve_real(A, rhs);
    DiskDirichletResult r;
    r.phi.delta = delta;
    r.phi.lin = 0.5;
    r.phi.g = 1.0;
    r.phi.c0 = x(0);
    for (int n = 1; n <= P; ++n) r.phi.a.push_back(cplx(x(2 * n - 1), x(2 * n)));
    r.sigma = x(0) + pi * delta * x(1);
    r.tau = x(0) - pi * delta * x(1);
    r.residual = (A * x - rhs).cwiseAbs().maxCoeff();
    return r;
}

struct DiskNeumannResult {
    StripHarmonic psi;
    double lambda = 0.0, residual = 0.0;
};

/// Psi = N + sum Re(a_n b_n) with zero normal derivative on the disk.
inline DiskNeumannResult disk_neumann(double delta, int P = 0)
{
    if (P <= 0) P = default_disk_order(delta);
    int C = 4 * P + 8;
    PeriodicDiskBasis B(delta, P + 2);
    auto bd = detail::disk_boundary(B, C);
    Eigen::MatrixXd A(C, 2 * P);
    Eigen::VectorXd rhs(C);
    for (int i = 0; i < C; ++i) {
        cplx nu = bd.nu[i];
        rhs(i) = -nu.real();
        for (int n = 1; n <= P; ++n) {
            cplx bp = detail::bprime(bd.b[i], n, delta) * nu;
            A(i, 2 * n - 2) = bp.real();
            A(i, 2 * n - 1) = (-I * bp).real();
        }
    }
    Eigen::VectorXd x = detail::solve_real(A, rhs);
    DiskNeumannResult r;
    r.psi.delta = delta;
    r.psi.lin = 1.0;
    for (int n = 1; n <= P; ++n) r.psi.a.push_back(cplx(x(2 * n - 2), x(2 * n - 1)));
    r.lambda = pi * delta * x(0);
    r.residual = (A * x - rhs).cwiseAbs().maxCoeff();
    return r;
}

/// Boundary perturbations of a disk wire under Model 1 (zero under Model 2).
inline std::pair<double, double> disk_perturbation(double delta, double theta, WireModel model)
{
    if (model == WireModel::Model2) return {0.0, 0.0};
    double s = std::sin(theta), c = std::cos(theta);
    return {-0.5 * delta * delta * c * s * s, delta * s * (1.0 - 1.5 * s * s)};
}

struct DiskTildeResult {
    double sigmaTilde = 0.0, tauTilde = 0.0, residual = 0.0;
};

/// Curvature correction Phi~+ = -1/2 N^2 Phi^+_N + H, with H bounded and
/// H = -d dPhi/dnu + 1/2 N^2 Phi_N on the disk.
inline DiskTildeResult disk_dirichlet_tilde(double delta, WireModel model, int P = 0)
{
    if (P <= 0) P = default_disk_order(delta);
    int C = 4 * P + 8;
    DiskDirichletResult base = disk_dirichlet(delta, P);
    PeriodicDiskBasis B(delta, P + 2);
    auto bd = detail::disk_boundary(B, C);
    Eigen::MatrixXd A(C, 1 + 2 * P);
    Eigen::VectorXd rhs(C);
    for (int i = 0; i < C; ++i) {
        cplx Z = bd.Z[i], nu = bd.nu[i];
        cplx Fp = 0.5 + PeriodicDiskBasis::green(Z).second;
        for (int n = 1; n <= P; ++n) Fp += base.phi.a[n - 1] * detail::bprime(bd.b[i], n, delta);
        double phiN = Fp.real();
        double phiNu = (Fp * nu).real();
        double d = disk_perturbation(delta, bd.theta[i], model).first;
        rhs(i) = -d * phiNu + 0.5 * Z.real() * Z.real() * phiN;
        A(i, 0) = 1.0;
        for (int n = 1; n <= P; ++n) {
            A(i, 2 * n - 1) = bd.b[i][n - 1].real();
            A(i, 2 * n) = -bd.b[i][n - 1].imag();
        }
    }
    Eigen::VectorXd x = detail::solve_real(A, rhs);
    DiskTildeResult r;
    r.sigmaTilde = x(0) + pi * delta * x(1);
    r.tauTilde = x(0) - pi * delta * x(1);
    r.residual = (A * x - rhs).cwiseAbs().maxCoeff();
    return r;
}

struct DiskNeumannHigher {
    double muTildeSolve = 0.0;   ///< from the Psi~ cell problem
    double muTildeFormula = 0.0; ///< from the boundary integral of Psi
    double muCheckSolve = 0.0;   ///< from the Psi-check cell problem
    double muCheckFormula = 0.0; ///< one half of the enclosed area, by boundary quadrature
    double residual = 0.0;
};

/// Neumann higher-order constants for the disk, each by two routes.
inline DiskNeumannHigher disk_neumann_higher(double delta, WireModel model, int P = 0)
{
    if (P <= 0) P = default_disk_order(delta);
    int C = 4 * P + 8;
    DiskNeumannResult base = disk_neumann(delta, P);
    PeriodicDiskBasis B(delta, P + 3);
    auto bd = detail::disk_boundary(B, C);
    Eigen::MatrixXd A(C, 1 + 2 * P);
    Eigen::VectorXd rt(C), rc(C);
    double integral = 0.0, area = 0.0;
    for (int i = 0; i < C; ++i) {
        cplx Z = bd.Z[i], nu = bd.nu[i];
        double N = Z.real();
        cplx F = Z, Fp = 1.0, Fpp = 0.0;
        for (int n = 1; n <= P; ++n) {
            F += base.psi.a[n - 1] * bd.b[i][n - 1];
            Fp += base.psi.a[n - 1] * detail::bprime(bd.b[i], n, delta);
            Fpp += base.psi.a[n - 1] * detail::bsecond(bd.b[i], n, delta);
        }
        auto [d, dt] = disk_perturbation(delta, bd.theta[i], model);
        double psi = F.real(), psiN = Fp.real();
        double psiNuNu = (Fpp * nu * nu).real();
        double psiPerp = (Fp * I * nu).real();
        double ds = 2.0 * pi * delta / C;
        integral += ((psi - 2.0 * N * psiN) * nu.real() + d * psiNuNu + dt * psiPerp) * ds;
        area += N * nu.real() * ds;
        rt(i) = -d * psiNuNu - dt * psiPerp + N * nu.real() * psiN + 0.5 * N * N * (Fpp * nu).real();
        rc(i) = N * nu.real();
        cplx gp = PeriodicDiskBasis::green(Z).second;
        A(i, 0) = 2.0 * (gp * nu).real();
        for (int n = 1; n <= P; ++n) {
            cplx bp = detail::bprime(bd.b[i], n, delta) * nu;
            A(i, 2 * n - 1) = bp.real();
            A(i, 2 * n) = (-I * bp).real();
        }
    }
    Eigen::VectorXd xt = detail::solve_real(A, rt);
    Eigen::VectorXd xc = detail::solve_real(A, rc);
    DiskNeumannHigher r;
    r.muTildeSolve = xt(0);
    r.muTildeFormula = base.lambda - 0.5 * integral;
    r.muCheckSolve = xc(0);
    r.muCheckFormula = 0.5 * area;
    r.residual = std::max((A * xt - rt).cwiseAbs().maxCoeff(), (A * xc - rc).cwiseAbs().maxCoeff());
    return r;
}

} // namespace cagecalc
