#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geometry.hpp"

namespace cagecalc {

struct FarFieldConstants {
    double sigmaPlus = 0.0, sigmaMinus = 0.0, tauPlus = 0.0, tauMinus = 0.0;
    double lambda = 0.0;
    std::optional<double> sigmaTildeMinus, tauTildeMinus;
    std::optional<double> muTilde, muHat, muCheck;
    std::optional<double> a0;
};

/// Cell-problem values on a tensor grid covering |N| <= Nmax, |S| <= 1/2.
/// Points inside the wire hold NaN.
struct CellSolution {
    std::vector<double> N; ///< column coordinates (increasing)
    std::vector<double> S; ///< row coordinates (increasing)
    Eigen::MatrixXd values; ///< values(row for S, column for N)
    std::vector<double> weightS; ///< quadrature weights in S, summing to one
    double h = 0.0;        ///< largest grid spacing
    double Nmax = 0.0;
    WireShape shape = WireShape::Disk;
    double delta = 0.0;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;

    /// S-average of column i (NaN when the column meets the wire).
    double column_average(std::size_t i) const
    {
        double s = 0.0;
        for (std::size_t j = 0; j < S.size(); ++j) s += weightS[j] * values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        return s;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (Eigen::Index i = 0; i < values.size(); ++i)
            if (std::isfinite(values.data()[i])) m = std::max(m, std::abs(values.data()[i]));
        return m;
    }
};

enum class FarSide { Plus, Minus };

struct FarFieldFit {
    std::vector<double> coeffs; ///< c0 + c1 N + c2 N^2
    double residual = 0.0;      ///< max deviation of the S-averaged profile from the fit
};

/// Fit the S-averaged profile on the outermost unit window of one side.
inline FarFieldFit far_field_fit(const CellSolution& sol, FarSide side, int order)
{
    if (order < 0 || order > 2) throw Error(ErrorKind::DomainError, "far_field_fit order must be 0, 1 or 2");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < sol.N.size(); ++i) {
        double n = sol.N[i];
        bool in = side == FarSide::Plus ? (n >= sol.Nmax - 1.0) : (n <= -sol.Nmax + 1.0);
        if (!in) continue;
        double v = sol.column_average(i);
        if (!std::isfinite(v)) continue;
        xs.push_back(n);
        ys.push_back(v);
    }
    if (static_cast<int>(xs.size()) < order + 1)
        throw Error(ErrorKind::WindowTooClose, "too few columns in the fit window");
    if (sol.Nmax - 1.0 < 2.0 - 1e-9)
        throw Error(ErrorKind::WindowTooClose, "fit window within two strip widths of the wire");
    Eigen::MatrixXd A(xs.size(), order + 1);
    Eigen::VectorXd b(xs.size());
    for (std::size_t r = 0; r < xs.size(); ++r) {
        double p = 1.0;
        for (int c = 0; c <= order; ++c) {
            A(r, c) = p;
            p *= xs[r];
        }
        b(r) = ys[r];
    }
    Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    FarFieldFit f;
    f.coeffs.assign(x.data(), x.data() + x.size());
    f.residual = (A * x - b).cwiseAbs().maxCoeff();
    double scale = std::max(sol.max_abs(), 1e-300);
    if (f.residual > 1e-4 * scale)
        throw Error(ErrorKind::WindowTooClose, "far field not reached in the fit window", f.residual);
    return f;
}

} // namespace cagecalc
