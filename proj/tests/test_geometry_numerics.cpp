#include <gtest/gtest.h>

#include <random>

#include <cagecalc/geometry.hpp>
#include <cagecalc/numerics.hpp>

using namespace cagecalc;

namespace {

CageConfig circle(int M, double delta, WireShape shape = WireShape::Disk, WireModel model = WireModel::Model1)
{
    CageConfig c;
    c.M = M;
    c.delta = delta;
    c.wireShape = shape;
    c.wireModel = model;
    return c;
}

/// J_m by its power series, independent of the library.
double j_series(int m, double x)
{
    double term = std::pow(x / 2, m) / std::tgamma(m + 1.0), sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= -(x * x / 4) / (k * double(k + m));
        sum += term;
    }
    return sum;
}

} // namespace

// ---------------------------------------------------------------------------
// geometry

TEST(Geometry, FourWiresOnTheCircle)
{
    auto g = build_cage(circle(4, 0.1));
    const cplx expect[4] = {1.0, I, -1.0, -I};
    for (int j = 0; j < 4; ++j) {
        EXPECT_NEAR(std::abs(g.centers[j] - expect[j]), 0.0, 1e-15);
        EXPECT_NEAR(g.normalAngles[j], j * pi / 2, 1e-15);
    }
    EXPECT_DOUBLE_EQ(g.epsilon, pi / 2);
    EXPECT_DOUBLE_EQ(g.wireRadius, 0.1 * pi / 2);
}

TEST(Geometry, EpsilonIsPerimeterOverM)
{
    EXPECT_NEAR(build_cage(circle(40, 0.1)).epsilon, 0.15707963, 1e-8);
    CageConfig sq;
    sq.curve = Curve::UnitSquare;
    sq.M = 32;
    // the square cage is [-1,1]^2, perimeter 8
    EXPECT_DOUBLE_EQ(build_cage(sq).epsilon, 0.25);
}

TEST(Geometry, Errors)
{
    try {
        build_cage(circle(2, 0.1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidCount);
    }
    try {
        build_cage(circle(10, 0.5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::WireOverlap);
    }
    EXPECT_NO_THROW(build_cage(circle(10, 0.69, WireShape::Square)));
    EXPECT_THROW(build_cage(circle(10, 0.71, WireShape::Square)), Error);
    EXPECT_NO_THROW(build_cage(circle(10, 5.0, WireShape::PerpendicularSegment)));
}

TEST(Geometry, CentersEquallySpacedOnTheSquare)
{
    CageConfig sq;
    sq.curve = Curve::UnitSquare;
    sq.M = 12;
    sq.delta = 0.1;
    sq.startArc = 0.3;
    auto g = build_cage(sq);
    for (int j = 0; j < g.M(); ++j) {
        cplx z = g.centers[j];
        EXPECT_NEAR(std::max(std::abs(z.real()), std::abs(z.imag())), 1.0, 1e-14);
        EXPECT_NEAR(g.arcPositions[j] - g.arcPositions[0], j * g.epsilon, 1e-12);
    }
    // a corner gets the bisector normal
    sq.startArc = 1.0;
    sq.M = 4;
    auto c = build_cage(sq);
    EXPECT_NEAR(std::abs(c.centers[0] - cplx(1, 1)), 0.0, 1e-14);
    EXPECT_NEAR(c.normalAngles[0], pi / 4, 1e-14);
}

TEST(Geometry, DiskBoundaryModel1)
{
    auto g = build_cage(circle(20, 0.05 / (2 * pi / 20)));
    for (cplx p : wire_boundary(g, 0, 64)) EXPECT_NEAR(std::abs(p - 1.0), 0.05, 1e-14);
}

TEST(Geometry, TangentialSegmentModel2IsAnArc)
{
    auto g = build_cage(circle(20, 0.25, WireShape::TangentialSegment, WireModel::Model2));
    auto pts = wire_boundary(g, 3, 33);
    double smin = 1e9, smax = -1e9;
    for (cplx p : pts) {
        EXPECT_NEAR(std::abs(p), 1.0, 1e-14);
        double s = std::arg(p * std::conj(g.centers[3]));
        smin = std::min(smin, s);
        smax = std::max(smax, s);
    }
    EXPECT_NEAR(smax - smin, 2 * 0.25 * g.epsilon, 1e-12);
    EXPECT_NEAR(smax + smin, 0.0, 1e-12);
    // Model 1 is the straight tangent segment through the centre
    auto g1 = build_cage(circle(20, 0.25, WireShape::TangentialSegment, WireModel::Model1));
    for (cplx p : wire_boundary(g1, 3, 33)) EXPECT_NEAR(((p - g1.centers[3]) * std::conj(g1.centers[3])).real(), 0.0, 1e-14);
}

TEST(Geometry, PerpendicularSegmentModelsAgree)
{
    auto a = build_cage(circle(16, 0.3, WireShape::PerpendicularSegment, WireModel::Model1));
    auto b = build_cage(circle(16, 0.3, WireShape::PerpendicularSegment, WireModel::Model2));
    for (int j = 0; j < 16; ++j) {
        auto pa = wire_boundary(a, j, 17), pb = wire_boundary(b, j, 17);
        for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(std::abs(pa[i] - pb[i]), 0.0, 1e-14);
    }
}

TEST(Geometry, CurvilinearMap)
{
    EXPECT_NEAR(std::abs(curvilinear_map(Curve::UnitCircle, 0, 0) - 1.0), 0, 1e-15);
    EXPECT_NEAR(std::abs(curvilinear_map(Curve::UnitCircle, 0.5, pi / 2) - cplx(0, 1.5)), 0, 1e-15);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> r(0.5, 2.0), th(0, 2 * pi);
    for (int i = 0; i < 100; ++i) {
        cplx z = std::polar(r(rng), th(rng));
        auto ns = curvilinear_inverse(Curve::UnitCircle, z);
        EXPECT_GE(ns.s, 0.0);
        EXPECT_LT(ns.s, 2 * pi);
        EXPECT_NEAR(std::abs(curvilinear_map(Curve::UnitCircle, ns.n, ns.s) - z), 0.0, 1e-14);
    }
    try {
        curvilinear_inverse(Curve::UnitCircle, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfReach);
    }
    EXPECT_THROW(curvilinear_inverse(Curve::UnitSquare, cplx(0.5, 0.5)), Error);
    auto ns = curvilinear_inverse(Curve::UnitSquare, cplx(1.2, 0.3));
    EXPECT_NEAR(ns.n, 0.2, 1e-15);
    EXPECT_NEAR(std::abs(curvilinear_map(Curve::UnitSquare, ns.n, ns.s) - cplx(1.2, 0.3)), 0, 1e-14);
}

TEST(GeometryProperty, RotatingStartPermutesCenters)
{
    auto a = build_cage(circle(9, 0.1));
    CageConfig c = circle(9, 0.1);
    c.startArc = 2 * pi / 9;
    auto b = build_cage(c);
    for (int j = 0; j < 9; ++j) EXPECT_NEAR(std::abs(b.centers[j] - a.centers[(j + 1) % 9]), 0, 1e-13);
}

TEST(GeometryProperty, WiresAreDisjoint)
{
    for (WireShape s : {WireShape::Disk, WireShape::Square, WireShape::TangentialSegment})
        for (int M : {3, 10, 50, 200}) {
            double d = 0.95 * delta_max(s);
            auto g = build_cage(circle(M, d, s));
            auto w0 = wire_boundary(g, 0, 48), w1 = wire_boundary(g, 1, 48);
            double dmin = 1e9;
            for (cplx p : w0)
                for (cplx q : w1) dmin = std::min(dmin, std::abs(p - q));
            EXPECT_GT(dmin, 0.0) << to_string(s) << " M=" << M;
        }
}

TEST(GeometryProperty, ModelsDifferAtSecondOrder)
{
    std::vector<double> ratio;
    for (int M : {20, 40, 80}) {
        auto a = build_cage(circle(M, 0.3, WireShape::Disk, WireModel::Model1));
        auto b = build_cage(circle(M, 0.3, WireShape::Disk, WireModel::Model2));
        auto pa = wire_boundary(a, 0, 128), pb = wire_boundary(b, 0, 128);
        double h = 0.0;
        for (std::size_t i = 0; i < pa.size(); ++i) h = std::max(h, std::abs(pa[i] - pb[i]));
        ratio.push_back(h / (a.epsilon * a.epsilon));
    }
    EXPECT_GT(ratio[0], 0.0);
    EXPECT_NEAR(ratio[2] / ratio[1], 1.0, 0.1);
    EXPECT_LT(ratio[2], 1.2 * ratio[0]);
}

// ---------------------------------------------------------------------------
// numerics

TEST(Bessel, ValuesAndZeros)
{
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(1, 0.0), 0.0);
    for (int m : {0, 1, 5, 12, 20})
        for (double x : {0.5, 3.3, 10.0}) // the series cancels badly beyond x ~ 10
            EXPECT_NEAR(bessel_j(m, x), j_series(m, x), 1e-11) << m << " " << x;
    // first zero of J0 by bisection on the series
    double a = 2.0, b = 3.0;
    for (int i = 0; i < 60; ++i) {
        double c = 0.5 * (a + b);
        (j_series(0, a) > 0) == (j_series(0, c) > 0) ? a = c : b = c;
    }
    EXPECT_NEAR(bessel_j_zero(0, 1), 0.5 * (a + b), 1e-12);
    EXPECT_NEAR(bessel_j_zero(0, 1), 2.404826, 1e-6);
    EXPECT_THROW(bessel_j(0, -1.0), Error);
    EXPECT_THROW(hankel1(0, 0.0), Error);
}

TEST(Bessel, WronskianAtRandomPoints)
{
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> mi(0, 20);
    std::uniform_real_distribution<double> xi(0.2, 50.0);
    for (int i = 0; i < 50; ++i) {
        int m = mi(rng);
        double x = xi(rng);
        double w = bessel_j(m, x) * bessel_yp(m, x) - bessel_jp(m, x) * bessel_y(m, x);
        EXPECT_NEAR(w, 2 / (pi * x), 1e-10 * std::max(1.0, 2 / (pi * x)));
    }
}

TEST(Bessel, RecurrenceProperty)
{
    for (int m = 1; m <= 15; ++m)
        for (double x = 0.5; x <= 20.0; x += 0.37)
            EXPECT_NEAR(bessel_j(m - 1, x) + bessel_j(m + 1, x), 2.0 * m / x * bessel_j(m, x), 1e-9);
}

TEST(Hankel, SmallArgumentAndModulus)
{
    double x = 1e-6;
    EXPECT_NEAR(hankel1(0, x).imag() / ((2 / pi) * std::log(x)), 1.0, 0.01);
    for (int m : {0, 2, 7}) {
        cplx h = hankel1(m, 3.1);
        EXPECT_EQ(h.real(), bessel_j(m, 3.1));
        EXPECT_EQ(h.imag(), bessel_y(m, 3.1));
        EXPECT_DOUBLE_EQ(std::abs(h), std::hypot(bessel_j(m, 3.1), bessel_y(m, 3.1)));
    }
}

TEST(Hankel, RatioMatchesContinuedFraction)
{
    // J1/J0 from the continued fraction of J_{n}/J_{n-1} = 1/(2n/x - J_{n+1}/J_n)
    const double x = 2.0;
    double f = 0.0;
    for (int n = 60; n >= 1; --n) f = 1.0 / (2.0 * n / x - f);
    double j0 = bessel_j(0, x), j1 = f * j0;
    // Y from the Wronskian J1 Y0 - J0 Y1 = 2/(pi x), with Y0 from the library
    double y0 = bessel_y(0, x), y1 = (j1 * y0 - 2 / (pi * x)) / j0;
    cplx oracle = cplx(j1, y1) / cplx(j0, y0);
    EXPECT_NEAR(std::abs(hankel1(1, x) / hankel1(0, x) - oracle), 0.0, 1e-10);
}

TEST(Hankel, SequenceMatchesDirect)
{
    auto h = hankel1_sequence(30, 4.2);
    for (int m = 0; m <= 30; ++m) EXPECT_NEAR(std::abs(h[m] / hankel1(m, 4.2) - 1.0), 0.0, 1e-11) << m;
}

TEST(Lstsq, IdentityAndPolynomial)
{
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd b(5);
    b << 1, -2, 3, 0.5, 7;
    EXPECT_NEAR((lstsq<double>(A, b).x - b).norm(), 0.0, 1e-15);
    Eigen::MatrixXd V(20, 3);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
        double t = -1 + 0.1 * i;
        V(i, 0) = 1;
        V(i, 1) = t;
        V(i, 2) = t * t;
        y(i) = 0.3 - 1.2 * t + 2.5 * t * t;
    }
    auto r = lstsq<double>(V, y);
    EXPECT_NEAR(r.x(0), 0.3, 1e-10);
    EXPECT_NEAR(r.x(1), -1.2, 1e-10);
    EXPECT_NEAR(r.x(2), 2.5, 1e-10);
}

TEST(Lstsq, RandomResidualOrthogonal)
{
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd A(200, 50);
    Eigen::VectorXcd b(200);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(nd(rng), nd(rng));
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = cplx(nd(rng), nd(rng));
    auto r = lstsq<cplx>(A, b);
    EXPECT_LE((A.adjoint() * (A * r.x - b)).norm() / (A.adjoint() * b).norm(), 1e-9);
    auto again = lstsq<cplx>(A, b);
    EXPECT_EQ(r.x, again.x);
}

TEST(Lstsq, RankDeficientReportsRank)
{
    Eigen::MatrixXd A(6, 3);
    for (int i = 0; i < 6; ++i) {
        A(i, 0) = i;
        A(i, 1) = 2.0 * i;
        A(i, 2) = 1.0;
    }
    Eigen::VectorXd b = Eigen::VectorXd::Ones(6);
    try {
        lstsq<double>(A, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
        EXPECT_EQ(e.index(), 2);
    }
    auto r = lstsq<double>(A, b, RankPolicy::MinimumNorm);
    EXPECT_NEAR(r.residual, 0.0, 1e-12);
}

TEST(Quadrature, Basics)
{
    EXPECT_NEAR(quad_1d([](double t) { return std::cos(t) * std::cos(t); }, 0, 2 * pi, 1e-13), pi, 1e-12);
    EXPECT_EQ(quad_1d([](double) { return 0.0; }, 0, 1), 0.0);
    double j01 = bessel_j_zero(0, 1);
    double v = quad_1d([&](double r) { return std::pow(bessel_j(0, j01 * r), 2) * r; }, 0, 1, 1e-12);
    EXPECT_NEAR(v, 0.5 * std::pow(bessel_j(1, j01), 2), 1e-10);
    EXPECT_NEAR(quad_disk([](double r, double) { return r * r; }, 2.0), pi * 8, 1e-9);
    cplx c = quad_1d([](double t) { return std::exp(I * t); }, 0, pi / 2);
    EXPECT_NEAR(std::abs(c - cplx(1, 1)), 0, 1e-10);
    EXPECT_NEAR(quad_periodic([](double t) { return std::exp(std::cos(t)); }), 2 * pi * std::cyl_bessel_i(0.0, 1.0), 1e-12);
}

TEST(Roots, FindRootAndMaximize)
{
    EXPECT_NEAR(find_root([](double x) { return x * x - 2; }, 0, 2), std::sqrt(2.0), 1e-14);
    EXPECT_THROW(find_root([](double x) { return x * x + 1; }, 0, 2), Error);
    auto e = scan_maximize([](double x) { return -std::pow(x - 0.3, 2); }, -1, 1, 11);
    EXPECT_NEAR(e.x, 0.3, 1e-7);
}
