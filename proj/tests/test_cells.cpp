#include <gtest/gtest.h>

#include <cagecalc/cellsolve.hpp>

using namespace cagecalc;

namespace {

/// Evaluate a strip harmonic at (N, S).
double at(const StripHarmonic& u, double N, double S)
{
    PeriodicDiskBasis B(u.delta, static_cast<int>(u.a.size()) + 2);
    std::vector<cplx> tmp;
    return u.value(B, cplx(N, S), tmp);
}

/// Wrap analytic values on the standard sampling grid.
template <class F>
CellSolution sample(F f, double delta, WireShape shape, double Nmax = 4.0, double h = 0.025)
{
    CellSolution c;
    c.shape = shape;
    c.delta = delta;
    c.h = h;
    c.Nmax = Nmax;
    int nN = static_cast<int>(std::lround(2 * Nmax / h)), nS = static_cast<int>(std::lround(1 / h));
    for (int i = 0; i < nN; ++i) c.N.push_back(-Nmax + (i + 0.5) * h);
    for (int j = 0; j < nS; ++j) c.S.push_back(-0.5 + (j + 0.5) * h);
    c.weightS.assign(nS, 1.0 / nS);
    c.values.resize(nS, nN);
    for (int j = 0; j < nS; ++j)
        for (int i = 0; i < nN; ++i) c.values(j, i) = f(cplx(c.N[i], c.S[j]));
    return c;
}

} // namespace

TEST(CellAnalytic, TangentialSegment)
{
    auto c = cell_dirichlet_analytic(WireShape::TangentialSegment, 1.0 / 6);
    EXPECT_NEAR(c.sigmaPlus, std::log(2.0) / (2 * pi), 1e-12);
    EXPECT_NEAR(c.sigmaPlus, 0.110318, 1e-6);
    EXPECT_EQ(c.sigmaPlus, c.tauPlus);
    EXPECT_EQ(c.sigmaPlus, c.sigmaMinus);
    // touching slits close the cage
    EXPECT_NEAR(cell_dirichlet_analytic(WireShape::TangentialSegment, 0.5).sigmaPlus, 0.0, 1e-15);
}

TEST(CellAnalytic, PerpendicularSegment)
{
    auto c = cell_dirichlet_analytic(WireShape::PerpendicularSegment, 0.25);
    // -log(sinh(pi/2)/2)/2pi and -log(tanh(pi/4))/2pi
    EXPECT_NEAR(c.sigmaPlus, -0.0223337, 1e-7);
    EXPECT_NEAR(c.tauPlus, 0.0671488, 1e-7);
    EXPECT_EQ(c.lambda, 0.0);
    EXPECT_THROW(cell_dirichlet_analytic(WireShape::Disk, 0.1), Error);
    EXPECT_THROW(cell_dirichlet_analytic(WireShape::TangentialSegment, 0.51), Error);
    EXPECT_NO_THROW(cell_dirichlet_analytic(WireShape::PerpendicularSegment, 3.0));
}

TEST(CellAnalytic, SlitFieldsMatchTheirConstants)
{
    // far from the slit, Phi+ = N + sigma on the right and tau e^{...} -> 0 on the left
    for (double d : {0.1, 0.3}) {
        auto t = cell_dirichlet_analytic(WireShape::TangentialSegment, d);
        EXPECT_NEAR(tangential_phi_plus(d, cplx(6.0, 0.2)), 6.0 + t.sigmaPlus, 1e-10);
        EXPECT_NEAR(tangential_phi_plus(d, cplx(-6.0, 0.3)), t.tauPlus, 1e-10);
        auto p = cell_dirichlet_analytic(WireShape::PerpendicularSegment, d);
        EXPECT_NEAR(perpendicular_phi_plus(d, cplx(6.0, 0.1)), 6.0 + p.sigmaPlus, 1e-10);
        EXPECT_NEAR(perpendicular_phi_plus(d, cplx(-6.0, -0.4)), p.tauPlus, 1e-10);
    }
}

TEST(CellNumeric, DiskSmallDelta)
{
    for (double d : {0.01, 0.02}) {
        auto r = cell_dirichlet_numeric(WireShape::Disk, d);
        double asym = std::log(1 / (2 * pi * d)) / (2 * pi);
        EXPECT_NEAR(r.constants.sigmaPlus, asym, 5e-3);
        EXPECT_NEAR(r.constants.tauPlus, asym, 5e-3);
        EXPECT_EQ(*r.constants.a0, 0.0);
    }
}

TEST(CellNumeric, DiskNearTouching)
{
    double sigma = cell_dirichlet_numeric(WireShape::Disk, 0.45).constants.sigmaPlus;
    double expect = -0.44 + 1.07 * 0.05;
    EXPECT_NEAR(sigma, expect, 0.05 * std::abs(expect));
}

TEST(CellNumeric, DiskTouching)
{
    auto c = cell_dirichlet_numeric(WireShape::Disk, 0.5).constants;
    EXPECT_NEAR(c.sigmaPlus, -0.44, 0.01);
    EXPECT_LT(std::abs(c.tauPlus), 1e-3);
}

TEST(CellNumeric, FiniteVolumeMatchesMultipole)
{
    auto a = cell_dirichlet_numeric(WireShape::Disk, 0.2, {}, CellMethod::Multipole).constants;
    auto b = cell_dirichlet_numeric(WireShape::Disk, 0.2, {}, CellMethod::FiniteVolume).constants;
    EXPECT_NEAR(a.sigmaPlus, b.sigmaPlus, 1e-3);
    EXPECT_NEAR(a.tauPlus, b.tauPlus, 1e-3);
    auto t = cell_dirichlet_numeric(WireShape::TangentialSegment, 0.2).constants;
    EXPECT_NEAR(t.sigmaPlus, cell_dirichlet_analytic(WireShape::TangentialSegment, 0.2).sigmaPlus, 2e-3);
}

TEST(CellNumeric, Errors)
{
    EXPECT_THROW(cell_dirichlet_numeric(WireShape::Disk, 0.51), Error);
    EXPECT_THROW(cell_dirichlet_numeric(WireShape::Disk, 0.0), Error);
    EXPECT_THROW(cell_dirichlet_numeric(WireShape::Square, 0.1, {}, CellMethod::Multipole), Error);
}

TEST(CellNumeric, SolutionIsHarmonicAndPeriodic)
{
    auto d = disk_dirichlet(0.2);
    for (double N : {-1.5, -0.6, 0.7, 2.0}) EXPECT_NEAR(at(d.phi, N, -0.5), at(d.phi, N, 0.5), 1e-12);
    auto sol = sample_strip_harmonic(d.phi, BoundaryCondition::Dirichlet);
    const double h = sol.h;
    double worst = 0.0;
    for (Eigen::Index j = 1; j + 1 < sol.values.rows(); ++j)
        for (Eigen::Index i = 1; i + 1 < sol.values.cols(); ++i) {
            double lap = sol.values(j + 1, i) + sol.values(j - 1, i) + sol.values(j, i + 1) + sol.values(j, i - 1) -
                         4 * sol.values(j, i);
            if (std::isfinite(lap)) worst = std::max(worst, std::abs(lap) / (h * h));
        }
    EXPECT_LE(worst * h * h, 10 * h * h * sol.max_abs());
    // Dirichlet value on the wire
    for (double t = 0; t < 2 * pi; t += 0.3) EXPECT_NEAR(at(d.phi, 0.2 * std::cos(t), 0.2 * std::sin(t)), 0.0, 1e-8);
}

TEST(CellNumeric, FarFieldApproachIsExponential)
{
    auto d = disk_dirichlet(0.2);
    auto dev = [&](double N) {
        double m = 0;
        for (double S = -0.5; S <= 0.5; S += 0.05) m = std::max(m, std::abs(at(d.phi, N, S) - (N + d.sigma)));
        return m;
    };
    EXPECT_NEAR(dev(2.0) / dev(1.0), std::exp(-2 * pi), 0.2 * std::exp(-2 * pi));
}

TEST(CellNeumann, Lambda)
{
    EXPECT_EQ(cell_neumann(WireShape::PerpendicularSegment, 0.3).lambda, 0.0);
    EXPECT_NEAR(cell_neumann(WireShape::TangentialSegment, 0.25).lambda, 0.110318, 1e-6);
    double d = 0.05, pd = pi * d;
    EXPECT_NEAR(cell_neumann(WireShape::Disk, d).lambda, pd * d / (1 - pd * pd / 3), 0.01 * pd * d);
    auto fv = cell_neumann(WireShape::TangentialSegment, 0.25, {}, CellMethod::FiniteVolume).lambda;
    EXPECT_NEAR(fv, 0.110318, 2e-3);
}

TEST(CellNeumann, DiskFiniteVolumeIsRejected)
{
    // a staircase boundary spoils the Neumann condition on a curved wire
    EXPECT_THROW(cell_neumann(WireShape::Disk, 0.2, {}, CellMethod::FiniteVolume), Error);
}

TEST(CellNeumann, TangentialPsiFarField)
{
    const double d = 0.2, lam = cell_neumann(WireShape::TangentialSegment, d).lambda;
    EXPECT_NEAR(tangential_psi(d, cplx(5.0, 0.1)), 5.0 + lam, 1e-10);
    EXPECT_NEAR(tangential_psi(d, cplx(-5.0, 0.3)), -5.0 - lam, 1e-10);
    // zero flux through the slit
    double h = 1e-6;
    for (double S : {-0.15, 0.0, 0.1})
        EXPECT_NEAR((tangential_psi(d, cplx(h, S)) - tangential_psi(d, cplx(2 * h, S))) / h, 0.0, 1e-4);
}

TEST(CellTilde, ModelsDiffer)
{
    auto m1 = cell_dirichlet_tilde(WireShape::Disk, 0.2, WireModel::Model1);
    auto m2 = cell_dirichlet_tilde(WireShape::Disk, 0.2, WireModel::Model2);
    EXPECT_GT(std::abs(m1.sigmaTilde - m2.sigmaTilde), 1e-4);
    // refinement in the multipole order leaves three significant figures unchanged
    auto lo = disk_dirichlet_tilde(0.2, WireModel::Model2, 24), hi = disk_dirichlet_tilde(0.2, WireModel::Model2, 48);
    EXPECT_NEAR(lo.sigmaTilde, hi.sigmaTilde, 1e-3 * std::abs(hi.sigmaTilde));
    EXPECT_THROW(cell_dirichlet_tilde(WireShape::Square, 0.2, WireModel::Model1), Error);
}

TEST(CellHigher, MuCheckIsHalfTheArea)
{
    EXPECT_NEAR(mu_check(WireShape::Disk, 0.3), 0.5 * pi * 0.09, 1e-12);
    // the square wire has half-diagonal delta, area 2 delta^2
    EXPECT_NEAR(mu_check(WireShape::Square, 0.3), 0.09, 1e-12);
    EXPECT_EQ(mu_check(WireShape::TangentialSegment, 0.3), 0.0);
    for (WireModel m : {WireModel::Model1, WireModel::Model2}) {
        auto h = disk_neumann_higher(0.2, m);
        EXPECT_NEAR(h.muTildeSolve, h.muTildeFormula, 1e-6);
        EXPECT_NEAR(h.muCheckSolve, h.muCheckFormula, 1e-6);
    }
}

TEST(FarFieldFit, ExactInputs)
{
    auto lin = sample([](cplx Z) { return Z.real() + 0.3; }, 0.1, WireShape::Disk);
    auto f = far_field_fit(lin, FarSide::Plus, 1);
    EXPECT_NEAR(f.coeffs[0], 0.3, 1e-12);
    EXPECT_NEAR(f.coeffs[1], 1.0, 1e-12);
    auto c = sample([](cplx) { return 0.7; }, 0.1, WireShape::Disk);
    EXPECT_NEAR(far_field_fit(c, FarSide::Minus, 0).coeffs[0], 0.7, 1e-12);
    EXPECT_NEAR(far_field_fit(c, FarSide::Minus, 0).residual, 0.0, 1e-12);
    EXPECT_THROW(far_field_fit(c, FarSide::Plus, 3), Error);
}

TEST(FarFieldFit, RecoversTangentialConstant)
{
    const double d = 0.2;
    auto sol = sample([&](cplx Z) { return tangential_phi_plus(d, Z); }, d, WireShape::TangentialSegment);
    auto exact = cell_dirichlet_analytic(WireShape::TangentialSegment, d);
    EXPECT_NEAR(far_field_fit(sol, FarSide::Plus, 1).coeffs[0], exact.sigmaPlus, 1e-4);
    EXPECT_NEAR(far_field_fit(sol, FarSide::Minus, 0).coeffs[0], exact.tauPlus, 1e-4);
}

TEST(CellProperty, ConstantsMonotoneInDelta)
{
    double prevS = 1e9, prevT = 1e9, prevL = -1;
    for (double d : {0.05, 0.1, 0.2, 0.3, 0.4}) {
        auto c = disk_dirichlet(d);
        double l = disk_neumann(d).lambda;
        EXPECT_LT(c.sigma, prevS);
        EXPECT_LT(c.tau, prevT);
        EXPECT_GT(l, prevL);
        EXPECT_GT(c.tau, 0.0);
        prevS = c.sigma;
        prevT = c.tau;
        prevL = l;
    }
}

TEST(CellProperty, SigmaChangesSignForDisks)
{
    EXPECT_GT(disk_dirichlet(0.10).sigma, 0.0);
    EXPECT_LT(disk_dirichlet(0.14).sigma, 0.0);
}

TEST(CellProperty, SquareBetweenInscribedAndCircumscribedDisks)
{
    // a square of half-diagonal d contains the disk of radius d/sqrt2 and sits inside radius d
    double d = 0.3;
    double sq = cell_dirichlet_numeric(WireShape::Square, d).constants.sigmaPlus;
    EXPECT_LT(sq, disk_dirichlet(d / std::sqrt(2.0)).sigma);
    EXPECT_GT(sq, disk_dirichlet(d).sigma);
}
