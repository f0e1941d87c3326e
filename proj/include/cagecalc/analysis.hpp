#pragma once

// Peak location and width of a scalar response curve.

#include <cmath>
#include <functional>

#include "discrete.hpp"
#include "errors.hpp"
#include "numerics.hpp"

namespace cagecalc {

struct Peak {
    double k = 0.0;
    double value = 0.0;
    double fwhm = std::numeric_limits<double>::quiet_NaN();
};

/// Scan, polish with Brent, then bracket the two half-maximum points.
inline Peak find_peak(const std::function<double(double)>& f, double lo, double hi, int nScan, bool width = false,
                      double xtol = 1e-10)
{
    Extremum e = scan_maximize(f, lo, hi, nScan, xtol);
    Peak p{e.x, e.value};
    if (!width) return p;
    auto g = [&](double k) { return f(k) - 0.5 * p.value; };
    double step = (hi - lo) / (nScan - 1);
    auto side = [&](double dir) {
        double a = p.k, b = p.k + dir * step * 0.25;
        for (int i = 0; i < 60 && g(b) > 0; ++i) {
            a = b;
            b = p.k + dir * (b - p.k) * 1.6;
        }
        if (g(b) > 0) throw Error(ErrorKind::NoConvergence, "half maximum not bracketed");
        return find_root(g, std::min(a, b), std::max(a, b), 1e-12);
    };
    p.fwhm = side(1.0) - side(-1.0);
    return p;
}

/// |phi(probe)| of the discrete Helmholtz solution as a function of k.
inline std::function<double(double)> discrete_response(const CageGeometry& g, cplx z0, cplx probe,
                                                       DiscreteOptions opt = {})
{
    return [g, z0, probe, opt](double k) { return std::abs(evaluate(solve_helmholtz(g, k, z0, opt), probe)); };
}

} // namespace cagecalc
