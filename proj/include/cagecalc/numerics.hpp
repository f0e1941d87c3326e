#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "errors.hpp"

namespace cagecalc {

using cplx = std::complex<double>;
using ComplexAmplitude = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr cplx I{0.0, 1.0};

// ---------------------------------------------------------------------------
// Cylinder functions (real argument, integer order)

inline double bessel_j(int m, double x)
{
    if (x < 0.0) throw Error(ErrorKind::DomainError, "bessel_j needs x >= 0", x);
    if (m < 0) return (m % 2 ? -1.0 : 1.0) * bessel_j(-m, x);
    return boost::math::cyl_bessel_j(m, x);
}

inline double bessel_jp(int m, double x)
{
    if (m == 0) return -bessel_j(1, x);
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x));
}

inline double bessel_y(int m, double x)
{
    if (x <= 0.0) throw Error(ErrorKind::DomainError, "bessel_y needs x > 0", x);
    if (m < 0) return (m % 2 ? -1.0 : 1.0) * bessel_y(-m, x);
    return boost::math::cyl_neumann(m, x);
}

inline double bessel_yp(int m, double x)
{
    if (m == 0) return -bessel_y(1, x);
    return 0.5 * (bessel_y(m - 1, x) - bessel_y(m + 1, x));
}

inline cplx hankel1(int m, double x)
{
    if (x <= 0.0) throw Error(ErrorKind::DomainError, "hankel1 needs x > 0", x);
    return {bessel_j(m, x), bessel_y(m, x)};
}

inline cplx hankel1p(int m, double x)
{
    if (x <= 0.0) throw Error(ErrorKind::DomainError, "hankel1 needs x > 0", x);
    return {bessel_jp(m, x), bessel_yp(m, x)};
}

/// H_0 .. H_nmax by upward recurrence. Y dominates for n > x so the
/// recurrence is stable for the combined function in relative terms.
inline std::vector<cplx> hankel1_sequence(int nmax, double x)
{
    std::vector<cplx> h(static_cast<std::size_t>(std::max(nmax, 1)) + 1);
    h[0] = hankel1(0, x);
    h[1] = hankel1(1, x);
    for (int n = 1; n < nmax; ++n) h[n + 1] = (2.0 * n / x) * h[n] - h[n - 1];
    h.resize(static_cast<std::size_t>(nmax) + 1);
    return h;
}

/// q-th positive zero of J_m (q >= 1).
inline double bessel_j_zero(int m, int q)
{
    if (q < 1 || m < 0) throw Error(ErrorKind::DomainError, "bessel_j_zero needs m >= 0, q >= 1");
    return boost::math::cyl_bessel_j_zero(static_cast<double>(m), q);
}

// ---------------------------------------------------------------------------
// Scalar root finding and maximisation

template <class F>
double find_root(F f, double a, double b, double tol = 1e-14)
{
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0))
        throw Error(ErrorKind::NoConvergence, "find_root: interval does not bracket a sign change");
    std::uintmax_t iters = 200;
    auto term = [tol](double x, double y) { return std::abs(x - y) <= tol * std::max(1.0, std::abs(x)); };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, term, iters);
    return 0.5 * (r.first + r.second);
}

/// q-th positive zero of J_m' (x = 0 excluded for m = 0).
inline double bessel_jp_zero(int m, int q)
{
    if (q < 1 || m < 0) throw Error(ErrorKind::DomainError, "bessel_jp_zero needs m >= 0, q >= 1");
    auto f = [m](double x) { return bessel_jp(m, x); };
    double step = 0.05, x = (m == 0 ? 0.5 : std::max(0.5, m * 0.9));
    int found = 0;
    double fx = f(x);
    while (true) {
        double y = x + step, fy = f(y);
        if ((fx > 0) != (fy > 0)) {
            if (++found == q) return find_root(f, x, y);
        }
        x = y;
        fx = fy;
    }
}

struct Extremum {
    double x;
    double value;
};

template <class F>
Extremum maximize(F f, double a, double b, double xtol = 1e-12)
{
    int bits = std::max(10, static_cast<int>(-std::log2(xtol)));
    bits = std::min(bits, std::numeric_limits<double>::digits / 2 + 4);
    std::uintmax_t iters = 500;
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, a, b, bits, iters);
    return {r.first, -r.second};
}

/// Scan n samples then polish the best one with Brent.
template <class F>
Extremum scan_maximize(F f, double a, double b, int n, double xtol = 1e-12)
{
    std::vector<double> v(n);
    double h = (b - a) / (n - 1);
    int best = 0;
    for (int i = 0; i < n; ++i) {
        v[i] = f(a + i * h);
        if (v[i] > v[best]) best = i;
    }
    double lo = a + std::max(best - 1, 0) * h;
    double hi = a + std::min(best + 1, n - 1) * h;
    Extremum e = maximize(f, lo, hi, xtol);
    if (e.value < v[best]) return {a + best * h, v[best]};
    return e;
}

// ---------------------------------------------------------------------------
// Least squares

template <class Scalar>
struct LstsqResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    Eigen::Index rank = 0;
    double residual = 0.0; ///< ||Ax - b||_2
};

enum class RankPolicy { Strict, MinimumNorm };

/// min ||Ax - b||_2 by column-pivoted QR. Strict mode throws RankDeficient
/// carrying the effective rank; MinimumNorm falls back to a complete
/// orthogonal decomposition.
template <class Scalar>
LstsqResult<Scalar> lstsq(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                          const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                          RankPolicy policy = RankPolicy::Strict, double threshold = -1.0)
{
    if (A.rows() < A.cols())
        throw Error(ErrorKind::DomainError, "lstsq needs rows >= cols");
    if (A.rows() != b.size())
        throw Error(ErrorKind::DomainError, "lstsq: dimension mismatch");
    LstsqResult<Scalar> out;
    if (A.cols() == 0) {
        out.x.resize(0);
        out.residual = b.norm();
        return out;
    }
    Eigen::ColPivHouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(A);
    if (threshold > 0) qr.setThreshold(threshold);
    out.rank = qr.rank();
    if (out.rank < A.cols()) {
        if (policy == RankPolicy::Strict)
            throw Error(ErrorKind::RankDeficient, "effective rank " + std::to_string(out.rank) +
                            " < " + std::to_string(A.cols()),
                        static_cast<double>(out.rank), static_cast<int>(out.rank));
        Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> cod(A);
        if (threshold > 0) cod.setThreshold(threshold);
        out.x = cod.solve(b);
    } else {
        out.x = qr.solve(b);
    }
    out.residual = (A * out.x - b).norm();
    return out;
}

// ---------------------------------------------------------------------------
// Quadrature

namespace detail {

template <class F>
double gk_real(F f, double a, double b, double tol)
{
    double err = 0.0;
    // boost's estimate degrades when asked for less than ~1e-14 relative
    double want = std::max(tol * 1e-2, 1e-14);
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 25, want, &err);
    if (!(err <= std::max(tol, tol * std::abs(v))))
        throw Error(ErrorKind::NoConvergence, "quad_1d error estimate above tolerance", err);
    return v;
}

} // namespace detail

/// Adaptive Gauss-Kronrod. Works for real and complex valued integrands.
template <class F>
auto quad_1d(F f, double a, double b, double tol = 1e-10)
{
    using R = std::decay_t<decltype(f(a))>;
    if constexpr (std::is_same_v<R, cplx>) {
        double re = detail::gk_real([&](double x) { return f(x).real(); }, a, b, tol);
        double im = detail::gk_real([&](double x) { return f(x).imag(); }, a, b, tol);
        return cplx(re, im);
    } else {
        return detail::gk_real([&](double x) { return static_cast<double>(f(x)); }, a, b, tol);
    }
}

/// Integral of a 2pi-periodic function by the trapezoid rule, doubling the
/// point count until two successive values agree.
template <class F>
auto quad_periodic(F f, double tol = 1e-12, int n0 = 16, int nmax = 1 << 16)
{
    using R = std::decay_t<decltype(f(0.0))>;
    auto rule = [&](int n) {
        R s{};
        for (int i = 0; i < n; ++i) s += f(2.0 * pi * i / n);
        return s * (2.0 * pi / n);
    };
    R prev = rule(n0);
    for (int n = 2 * n0; n <= nmax; n *= 2) {
        R cur = rule(n);
        if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    throw Error(ErrorKind::NoConvergence, "quad_periodic did not converge");
}

/// Integral over the disk of the given radius; f takes polar (rho, theta).
template <class F>
auto quad_disk(F f, double radius, double tol = 1e-10)
{
    auto ring = [&](double rho) {
        return rho * quad_periodic([&](double th) { return f(rho, th); }, tol * 1e-2);
    };
    return quad_1d(ring, 0.0, radius, tol);
}

} // namespace cagecalc
