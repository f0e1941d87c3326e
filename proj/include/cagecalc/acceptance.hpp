#pragma once

// End-to-end acceptance checks. Each returns a pass flag plus a one-line
// detail; shared by the acceptance test binary and `cagecalc selftest`.

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "cellsolve.hpp"
#include "discrete.hpp"
#include "homogenized.hpp"
#include "resonance.hpp"

namespace cagecalc::acceptance {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline std::string fmt(double v, int prec = 6)
{
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline CageGeometry circle_disks(int M, double delta)
{
    CageConfig c;
    c.M = M;
    c.delta = delta;
    return build_cage(c);
}

inline CageGeometry square_disks(int M, double delta)
{
    CageConfig c;
    c.curve = Curve::UnitSquare;
    c.M = M;
    c.delta = delta;
    return build_cage(c);
}

/// Resonance report for the first J0 mode of a disk cage, exterior source.
inline ResonanceReport circle_j0_report(int M, double delta, cplx z0)
{
    ModeSpec mode = circle_mode(0, 1);
    auto d = disk_dirichlet(delta);
    ResonanceInputs in;
    in.sigmaMinus = d.sigma;
    in.tauPlus = in.tauMinus = d.tau;
    in.epsilon = 2 * pi / M;
    in.sigmaTildeMinus = cell_dirichlet_tilde(WireShape::Disk, delta, WireModel::Model1).sigmaTilde;
    in.sigmaTildeModel2 = cell_dirichlet_tilde(WireShape::Disk, delta, WireModel::Model2).sigmaTilde;
    return second_order(mode, in, circle_mode_integrals(mode), ForcingKind::Exterior, source_integral_I7(mode, z0));
}

/// Interior-source report for the square (1,1) mode with the published I4.
inline ResonanceReport square_report(int M, double delta, cplx z0)
{
    ModeSpec mode = square_mode(1, 1);
    auto d = disk_dirichlet(delta);
    ResonanceInputs in;
    in.sigmaMinus = d.sigma;
    in.tauPlus = in.tauMinus = d.tau;
    in.epsilon = perimeter(Curve::UnitSquare) / M;
    return second_order(mode, in, square_mode_integrals(mode), ForcingKind::Interior, source_integral_I8(mode, z0));
}

inline double tau_disk(double delta) { return disk_dirichlet(delta).tau; }

} // namespace detail

// ---------------------------------------------------------------------------

inline Outcome cell_closed_forms()
{
    auto t0 = std::chrono::steady_clock::now();
    double worstS = 0.0, worstL = 0.0;
    for (double d : {0.1, 0.2, 0.3, 0.45}) {
        auto exact = cell_dirichlet_analytic(WireShape::TangentialSegment, d);
        auto s = strip_dirichlet(WireShape::TangentialSegment, d);
        auto n = strip_neumann(WireShape::TangentialSegment, d);
        worstS = std::max({worstS, std::abs(s.sigma - exact.sigmaPlus), std::abs(s.tau - exact.tauPlus)});
        worstL = std::max(worstL, std::abs(n.lambda - exact.lambda));
    }
    double t = detail::seconds_since(t0);
    Outcome o;
    o.pass = worstS < 1e-3 && worstL < 1e-3 && t < 30.0;
    o.detail = "max|dsigma|=" + detail::fmt(worstS, 3) + " max|dlambda|=" + detail::fmt(worstL, 3) +
               " time=" + detail::fmt(t, 3) + "s";
    return o;
}

inline Outcome disk_limits()
{
    auto half = disk_dirichlet(0.5);
    auto small = disk_dirichlet(0.01);
    double ref = std::log(1.0 / (2 * pi * 0.01)) / (2 * pi);
    double lam = disk_neumann(0.05).lambda, lamRef = pi * 0.05 * 0.05;
    double eS = detail::rel(small.sigma, ref), eT = detail::rel(small.tau, ref), eL = detail::rel(lam, lamRef);
    Outcome o;
    o.pass = std::abs(half.sigma + 0.44) <= 0.01 && std::abs(half.tau) < 1e-3 && eS < 0.02 && eT < 0.02 && eL < 0.03;
    o.detail = "sigma(0.5)=" + detail::fmt(half.sigma) + " tau(0.5)=" + detail::fmt(half.tau, 3) +
               " rel(sigma,tau @0.01)=" + detail::fmt(eS, 3) + "," + detail::fmt(eT, 3) +
               " rel(lambda @0.05)=" + detail::fmt(eL, 3);
    return o;
}

inline Outcome neumann_identities()
{
    double worstArea = 0.0;
    for (double d : {0.1, 0.25, 0.4}) {
        worstArea = std::max(worstArea, std::abs(mu_check(WireShape::Disk, d) - 0.5 * wire_area(WireShape::Disk, d)));
        worstArea =
            std::max(worstArea, std::abs(mu_check(WireShape::Square, d) - 0.5 * wire_area(WireShape::Square, d)));
    }
    double worstZero = 0.0;
    for (double d : {0.1, 0.25, 0.4}) {
        auto h = cell_neumann_higher(WireShape::TangentialSegment, d, WireModel::Model2);
        worstZero = std::max({worstZero, std::abs(h.muTilde), std::abs(h.muHat), std::abs(h.muCheck)});
    }
    Outcome o;
    o.pass = worstArea < 1e-10 && worstZero < 1e-6;
    o.detail = "max|mucheck-Area/2|=" + detail::fmt(worstArea, 3) + " tangential max|mu|=" + detail::fmt(worstZero, 3);
    return o;
}

inline Outcome gap_table()
{
    const double target = 0.01;
    auto tangential = [&](double d) { return cell_dirichlet_analytic(WireShape::TangentialSegment, d).tauPlus - target; };
    auto perpendicular = [&](double d) {
        return cell_dirichlet_analytic(WireShape::PerpendicularSegment, d).tauPlus - target;
    };
    auto disk = [&](double d) { return detail::tau_disk(d) - target; };
    StripGridSpec spec;
    auto square = [&](double d) { return strip_dirichlet(WireShape::Square, d, spec).tau - target; };
    double dt = find_root(tangential, 0.3, 0.49, 1e-10);
    double dd = find_root(disk, 0.15, 0.35, 1e-8);
    double ds = find_root(square, 0.2, 0.35, 1e-5);
    double dp = find_root(perpendicular, 0.3, 0.8, 1e-10);
    double gT = 1 - 2 * dt, gD = 1 - 2 * dd, gS = 1 - std::sqrt(2.0) * ds, lP = 2 * dp;
    Outcome o;
    o.pass = std::abs(gT - 0.223) <= 0.005 && std::abs(gD - 0.54) <= 0.03 && std::abs(gS - 0.61) <= 0.03 &&
             std::abs(lP - 1.10) <= 0.03;
    o.detail = "gap tangential=" + detail::fmt(gT, 4) + " disk=" + detail::fmt(gD, 4) + " square=" +
               detail::fmt(gS, 4) + " perpendicular 2delta=" + detail::fmt(lP, 4);
    return o;
}

inline Outcome laplace_figure2()
{
    auto t0 = std::chrono::steady_clock::now();
    const cplx z0 = 2.0;
    double worstThin = 1.0, worstThick = 1.0;
    std::string where;
    for (int M : {20, 40}) {
        for (double d : {0.001, 0.005, 0.01, 0.02}) {
            auto g = detail::circle_disks(M, d);
            double disc = gradient_magnitude(evaluate_gradient(solve_laplace(g, z0), 0.0));
            auto a = alpha_of(d, log_capacity_a0(WireShape::Disk), g.epsilon);
            double thin = laplace_thin_interior(z0, a.alpha).gradient_at_origin();
            double r = thin / disc;
            if (std::abs(r - 1) > std::abs(worstThin - 1)) worstThin = r;
        }
        for (int i = 0; i <= 12; ++i) {
            double d = 0.1 + 0.025 * i;
            auto g = detail::circle_disks(M, d);
            double disc = gradient_magnitude(evaluate_gradient(solve_laplace(g, z0), 0.0));
            double thick = laplace_thick_interior(z0, detail::tau_disk(d), g.epsilon).gradient_at_origin();
            double r = thick / disc;
            if (std::abs(r - 1) > std::abs(worstThick - 1)) {
                worstThick = r;
                where = "M=" + std::to_string(M) + ",delta=" + detail::fmt(d, 3);
            }
        }
    }
    double t = detail::seconds_since(t0);
    Outcome o;
    o.pass = std::abs(worstThin - 1) <= 0.10 && std::abs(worstThick - 1) <= 0.10 && t < 120.0;
    o.detail = "worst thin/discrete=" + detail::fmt(worstThin, 4) + " worst thick/discrete=" +
               detail::fmt(worstThick, 4) + " at " + where + " time=" + detail::fmt(t, 3) + "s";
    return o;
}

inline Outcome inverse_linear_law()
{
    const double delta = 0.05;
    std::vector<double> g;
    for (int M : {20, 40, 80})
        g.push_back(gradient_magnitude(evaluate_gradient(solve_laplace(detail::circle_disks(M, delta), 2.0), 0.0)));
    double r1 = g[0] / g[1], r2 = g[1] / g[2];
    Outcome o;
    o.pass = std::abs(r1 / 2 - 1) <= 0.10 && std::abs(r2 / 2 - 1) <= 0.10;
    o.detail = "delta=0.05 ratios 20->40=" + detail::fmt(r1, 4) + " 40->80=" + detail::fmt(r2, 4);
    return o;
}

inline Outcome resonance_amplification()
{
    auto g = detail::circle_disks(30, 0.1);
    Peak p = find_peak(discrete_response(g, 2.0, 0.0), 2.2, 2.6, 81);
    double freeField = std::abs(free_field(Equation::Helmholtz, p.k, 2.0, 0.0));
    double factor = p.value / freeField;
    Outcome o;
    o.pass = factor > 2.0;
    o.detail = "k=" + detail::fmt(p.k, 7) + " |phi(0)|=" + detail::fmt(p.value) + " free=" + detail::fmt(freeField) +
               " factor=" + detail::fmt(factor, 4);
    return o;
}

inline Outcome shifted_resonance()
{
    auto rep = detail::circle_j0_report(30, 0.1, 2.0);
    auto g = detail::circle_disks(30, 0.1);
    Peak p = find_peak(discrete_response(g, 2.0, 0.0), rep.kPeak - 0.03, rep.kPeak + 0.03, 31);
    double pred = rep.peak_field(0.0);
    double dk = std::abs(rep.kPeak - p.k), ea = detail::rel(pred, p.value);
    Outcome o;
    o.pass = dk < 0.01 && ea < 0.20;
    o.detail = "predicted k=" + detail::fmt(rep.kPeak, 7) + " discrete k=" + detail::fmt(p.k, 7) +
               " predicted peak=" + detail::fmt(pred) + " discrete peak=" + detail::fmt(p.value) +
               " rel=" + detail::fmt(ea, 3);
    return o;
}

inline Outcome resonance_scaling()
{
    Peak peaks[2];
    int Ms[2] = {30, 60};
    for (int i = 0; i < 2; ++i) {
        auto rep = detail::circle_j0_report(Ms[i], 0.1, 2.0);
        double w = 4 * rep.fwhm_k();
        auto g = detail::circle_disks(Ms[i], 0.1);
        peaks[i] = find_peak(discrete_response(g, 2.0, 0.0), rep.kPeak - 2 * w, rep.kPeak + 2 * w, 41, true, 1e-12);
    }
    double amp = peaks[1].value / peaks[0].value, width = peaks[0].fwhm / peaks[1].fwhm;
    Outcome o;
    o.pass = std::abs(amp / 2 - 1) <= 0.25 && std::abs(width / 4 - 1) <= 0.25;
    o.detail = "amplitude ratio=" + detail::fmt(amp, 4) + " (2) fwhm ratio=" + detail::fmt(width, 4) + " (4)";
    return o;
}

inline Outcome square_interior_source()
{
    const cplx z0 = -0.5;
    DiscreteOptions opt;
    opt.P = 6;
    opt.C = 2 * (2 * opt.P + 1);
    std::vector<double> ext, ratio;
    std::string d;
    for (int M : {24, 32, 48}) {
        auto rep = detail::square_report(M, 0.1, z0);
        auto g = detail::square_disks(M, 0.1);
        double e = rep.inputs.epsilon;
        // the response is sharp; bracket it around the first-order prediction
        double half = std::max(0.015, 6 * rep.fwhm_k());
        Peak p2 = find_peak(discrete_response(g, z0, 2.0, opt), rep.kPeakFirstOrder - half,
                            rep.kPeakFirstOrder + half, 41, false, 1e-9);
        double a0 = std::abs(evaluate(solve_helmholtz(g, p2.k, z0, opt), 0.0));
        ext.push_back(p2.value * e);
        ratio.push_back(a0 / rep.peak_field(0.0));
        d += " M=" + std::to_string(M) + ":k=" + detail::fmt(p2.k, 6) + ",kpred=" + detail::fmt(rep.kPeakFirstOrder, 6) +
             ",amp(2)*eps=" + detail::fmt(p2.value * e, 4) + ",amp(0)/pred=" + detail::fmt(ratio.back(), 4);
    }
    bool ok = true;
    for (std::size_t i = 1; i < ext.size(); ++i) ok = ok && std::abs(ext[i] / ext[0] - 1) <= 0.25;
    Outcome o;
    o.pass = ok;
    o.detail = "exterior peak*eps constant within 25%:" + d;
    return o;
}

// ---------------------------------------------------------------------------
// Properties

inline Outcome property_lstsq()
{
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd A(60, 12);
    Eigen::VectorXcd b(60);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(nd(rng), nd(rng));
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = cplx(nd(rng), nd(rng));
    auto r = lstsq<cplx>(A, b);
    double orth = (A.adjoint() * (A * r.x - b)).norm() / (A.norm() * b.norm());
    return {orth < 1e-12, "|A^H r|/(|A||b|)=" + detail::fmt(orth, 3)};
}

inline Outcome property_bessel()
{
    double worstRec = 0.0, worstW = 0.0;
    for (double x : {0.3, 1.7, 5.2, 12.0})
        for (int m = 1; m <= 8; ++m) {
            double rec = bessel_j(m - 1, x) + bessel_j(m + 1, x) - 2.0 * m / x * bessel_j(m, x);
            worstRec = std::max(worstRec, std::abs(rec));
            double w = bessel_j(m, x) * bessel_yp(m, x) - bessel_jp(m, x) * bessel_y(m, x);
            worstW = std::max(worstW, std::abs(w * pi * x / 2 - 1));
        }
    return {worstRec < 1e-12 && worstW < 1e-10,
            "recurrence=" + detail::fmt(worstRec, 3) + " wronskian=" + detail::fmt(worstW, 3)};
}

inline Outcome property_reciprocity()
{
    auto g = detail::circle_disks(12, 0.1);
    const cplx a(1.6, 0.4), b(-0.3, 0.2);
    DiscreteOptions opt;
    opt.farField = LaplaceFarField::Grounded;
    double lap = std::abs(evaluate(solve_laplace(g, a, opt), b) - evaluate(solve_laplace(g, b, opt), a)) /
                 std::abs(evaluate(solve_laplace(g, a, opt), b));
    cplx hab = evaluate(solve_helmholtz(g, 3.1, a), b), hba = evaluate(solve_helmholtz(g, 3.1, b), a);
    double helm = std::abs(hab - hba) / std::abs(hab);
    return {lap < 1e-6 && helm < 1e-6, "laplace=" + detail::fmt(lap, 3) + " helmholtz=" + detail::fmt(helm, 3)};
}

inline Outcome property_gradient()
{
    auto g = detail::circle_disks(16, 0.1);
    auto s = solve_helmholtz(g, 2.3, 2.0);
    const cplx z(0.2, -0.35);
    const double h = 1e-5;
    auto gr = evaluate_gradient(s, z);
    cplx dx = (evaluate(s, z + h) - evaluate(s, z - h)) / (2 * h);
    cplx dy = (evaluate(s, z + I * h) - evaluate(s, z - I * h)) / (2 * h);
    double err = std::max(std::abs(gr[0] - dx), std::abs(gr[1] - dy)) / gradient_magnitude(gr);
    return {err < 1e-6, "relative error=" + detail::fmt(err, 3)};
}

namespace detail {

/// The grid of a symmetric wire must be mirror symmetric in N and S, and the
/// N-mirrored Phi+ (which is Phi- for such a wire) must fit N -> -N + sigma-
/// and tau- with the same constants as Phi+.
inline double cell_symmetry_error(const CellSolution& c, double sigma, double tau)
{
    const auto nx = c.values.cols(), ny = c.values.rows();
    for (Eigen::Index j = 0; j < ny; ++j)
        for (Eigen::Index i = 0; i < nx; ++i)
            if (std::isnan(c.values(j, i)) != std::isnan(c.values(ny - 1 - j, nx - 1 - i)))
                return std::numeric_limits<double>::infinity();
    CellSolution m = c;
    m.values = c.values.rowwise().reverse();
    for (auto& n : m.N) n = -n;
    std::reverse(m.N.begin(), m.N.end());
    auto plus = far_field_fit(c, FarSide::Plus, 1), left = far_field_fit(c, FarSide::Minus, 0);
    auto minus = far_field_fit(m, FarSide::Minus, 1), right = far_field_fit(m, FarSide::Plus, 0);
    double e = 0.0;
    e = std::max(e, std::abs(plus.coeffs[1] - 1.0));
    e = std::max(e, std::abs(minus.coeffs[1] + 1.0));
    e = std::max(e, std::abs(plus.coeffs[0] - sigma));
    e = std::max(e, std::abs(minus.coeffs[0] - sigma));
    e = std::max(e, std::abs(left.coeffs[0] - tau));
    e = std::max(e, std::abs(right.coeffs[0] - tau));
    // S reflection
    for (Eigen::Index j = 0; j < ny; ++j)
        for (Eigen::Index i = 0; i < nx; ++i)
            if (std::isfinite(c.values(j, i)))
                e = std::max(e, std::abs(c.values(j, i) - c.values(ny - 1 - j, i)));
    return e;
}

} // namespace detail

inline Outcome property_cell_symmetry()
{
    auto disk = cell_dirichlet_numeric(WireShape::Disk, 0.2);
    auto diskFv = cell_dirichlet_numeric(WireShape::Disk, 0.2, {}, CellMethod::FiniteVolume);
    auto square = cell_dirichlet_numeric(WireShape::Square, 0.3);
    double eD = detail::cell_symmetry_error(disk.solution, disk.constants.sigmaPlus, disk.constants.tauPlus);
    double eS = detail::cell_symmetry_error(square.solution, square.constants.sigmaPlus, square.constants.tauPlus);
    // two independent solvers for the disk
    double cross = std::max(std::abs(disk.constants.sigmaPlus - diskFv.constants.sigmaPlus),
                            std::abs(disk.constants.tauPlus - diskFv.constants.tauPlus));
    // the FV fits use the finest level, the constants are extrapolated
    return {eD < 1e-6 && eS < 2e-3 && cross < 2e-3, "disk=" + detail::fmt(eD, 3) + " square=" + detail::fmt(eS, 3) +
                                                     " disk multipole vs FV=" + detail::fmt(cross, 3)};
}

inline Outcome property_lorentzian()
{
    auto rep = detail::circle_j0_report(30, 0.1, 2.0);
    double x = rep.kTildeTildeStar + std::sqrt(3.0) * rep.width;
    double lo = rep.lorentzian(2 * rep.kTildeTildeStar - x), hi = rep.lorentzian(x);
    double e = std::max(std::abs(lo / rep.peakAmplitude - 0.5), std::abs(hi / rep.peakAmplitude - 0.5));
    double fw = rep.fwhm_k();
    double kHi = rep.kPeak + 0.5 * fw;
    e = std::max(e, std::abs(rep.lorentzian_k(kHi) / rep.peakAmplitude - 0.5));
    return {e < 1e-12, "half-width error=" + detail::fmt(e, 3)};
}

inline Outcome property_rescaling()
{
    auto base = detail::circle_j0_report(30, 0.1, 2.0);
    double worstK = 0.0, worstF = 0.0;
    for (double sc : {0.3, 2.7}) {
        ModeSpec mode = circle_mode(0, 1);
        mode.scale = sc;
        ResonanceInputs in = base.inputs;
        auto r = second_order(mode, in, circle_mode_integrals(mode), ForcingKind::Exterior, source_integral_I7(mode, 2.0));
        worstK = std::max(worstK, std::abs(r.kPeak - base.kPeak));
        worstF = std::max(worstF, detail::rel(r.peak_field(0.3), base.peak_field(0.3)));
    }
    ModeSpec sq = square_mode(1, 1);
    sq.scale = 1.9;
    auto sb = detail::square_report(32, 0.1, -0.5);
    ResonanceInputs in = sb.inputs;
    auto r = second_order(sq, in, square_mode_integrals(sq), ForcingKind::Interior, source_integral_I8(sq, -0.5));
    worstK = std::max(worstK, std::abs(r.kPeak - sb.kPeak));
    worstF = std::max(worstF, detail::rel(r.peak_field(0.0), sb.peak_field(0.0)));
    return {worstK < 1e-12 && worstF < 1e-10, "dk=" + detail::fmt(worstK, 3) + " dfield=" + detail::fmt(worstF, 3)};
}

inline Outcome property_suite()
{
    std::vector<std::pair<std::string, std::function<Outcome()>>> props = {
        {"lstsq", property_lstsq},           {"bessel", property_bessel},
        {"reciprocity", property_reciprocity}, {"gradient", property_gradient},
        {"cell-symmetry", property_cell_symmetry}, {"lorentzian", property_lorentzian},
        {"rescaling", property_rescaling},
    };
    Outcome all{true, ""};
    for (auto& [name, f] : props) {
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, e.what()};
        }
        all.pass = all.pass && o.pass;
        all.detail += (all.detail.empty() ? "" : "; ") + name + (o.pass ? " ok " : " FAIL ") + "(" + o.detail + ")";
    }
    return all;
}

// ---------------------------------------------------------------------------

inline std::vector<Criterion> criteria()
{
    return {
        {"cell constants vs closed forms", cell_closed_forms},
        {"disk cell limits", disk_limits},
        {"higher-order Neumann identities", neumann_identities},
        {"gap-thickness table", gap_table},
        {"electrostatic thin/thick comparison", laplace_figure2},
        {"inverse-linear shielding law", inverse_linear_law},
        {"resonance amplification", resonance_amplification},
        {"shifted-resonance prediction", shifted_resonance},
        {"scaling laws at resonance", resonance_scaling},
        {"square cage interior source", square_interior_source},
        {"property suite", property_suite},
    };
}

inline Verdict run(const Criterion& c)
{
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    v.name = c.name;
    try {
        Outcome o = c.run();
        v.pass = o.pass;
        v.detail = o.detail;
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    v.seconds = detail::seconds_since(t0);
    return v;
}

} // namespace cagecalc::acceptance
