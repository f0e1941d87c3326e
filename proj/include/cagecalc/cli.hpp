#pragma once

// Config-driven front end: INI parsing, sweeps, field grids, resonance
// reports and the CSV/JSON writers. tools/cagecalc.cpp is a thin shell.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "analysis.hpp"
#include "cellsolve.hpp"
#include "discrete.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "homogenized.hpp"
#include "resonance.hpp"

namespace cagecalc::cli {

using json = nlohmann::ordered_json;

enum class SweepVar { K, Delta, M };
enum class Spacing { Linear, Log };
enum class Model { Discrete, Thin, Thick, Resonance, NeumannShell };

inline const char* to_string(Model m)
{
    switch (m) {
    case Model::Discrete: return "discrete";
    case Model::Thin: return "thin";
    case Model::Thick: return "thick";
    case Model::Resonance: return "resonance";
    case Model::NeumannShell: return "neumann-shell";
    }
    return "?";
}

struct Probe {
    cplx z;
    std::string label;
};

struct Common {
    CageConfig cage;
    bool emptyCage = false; ///< M = 0: free field only
    Equation equation = Equation::Helmholtz;
    double k = 1.0;
    cplx z0{2.0, 0.0};
    DiscreteOptions discrete;
    std::string name = "cagecalc";
    std::string hash;
};

struct PeakTableSpec {
    std::vector<double> deltas;
    std::vector<int> Ms;
    int modeM = 0, modeQ = 1;
    double window = 0.03;
    int samples = 31;
};

struct SweepSpec {
    Common common;
    bool hasSweep = false;
    SweepVar variable = SweepVar::K;
    double from = 0.0, to = 1.0;
    int count = 2;
    Spacing spacing = Spacing::Linear;
    std::vector<Model> models;
    std::vector<Probe> probes;
    bool gradient = false; ///< |grad phi| instead of |phi|
    std::optional<PeakTableSpec> peaks;
};

struct GridSpec {
    Common common;
    double xmin = -2, xmax = 2, ymin = -2, ymax = 2;
    int nx = 81, ny = 81;
};

struct ResonanceSpec {
    Common common;
    int i1 = 0, i2 = 1;
    double gauge = 0.0;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

namespace pt = boost::property_tree;

inline std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] inline void bad(const std::string& field, const std::string& why)
{
    throw Error(ErrorKind::ConfigError, "field '" + field + "': " + why);
}

inline double to_double(const std::string& field, const std::string& v)
{
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    bad(field, "expected a number, got '" + v + "'");
}

inline int to_int(const std::string& field, const std::string& v)
{
    double d = to_double(field, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) bad(field, "expected an integer, got '" + v + "'");
    return static_cast<int>(d);
}

/// "x" or "x,y".
inline cplx to_point(const std::string& field, const std::string& v)
{
    auto parts = split(v, ',');
    if (parts.size() == 1) return {to_double(field, parts[0]), 0.0};
    if (parts.size() == 2) return {to_double(field, parts[0]), to_double(field, parts[1])};
    bad(field, "expected 'x' or 'x,y', got '" + v + "'");
}

class Reader {
public:
    explicit Reader(const pt::ptree& t) : t_(t) {}

    bool has_section(const std::string& s) const { return t_.get_child_optional(s).has_value(); }

    std::optional<std::string> raw(const std::string& key) const
    {
        auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    std::string str(const std::string& key, const std::string& def) const { return raw(key).value_or(def); }

    std::string required(const std::string& key) const
    {
        auto v = raw(key);
        if (!v) bad(key, "missing");
        return *v;
    }

    double num(const std::string& key, double def) const
    {
        auto v = raw(key);
        return v ? to_double(key, *v) : def;
    }

    int integer(const std::string& key, int def) const
    {
        auto v = raw(key);
        return v ? to_int(key, *v) : def;
    }

private:
    const pt::ptree& t_;
};

inline std::string format_probe(cplx z)
{
    std::ostringstream os;
    os << std::setprecision(6) << z.real();
    if (z.imag() != 0.0) os << (z.imag() > 0 ? "+" : "") << std::setprecision(6) << z.imag() << "i";
    return os.str();
}

inline const std::vector<std::string>& known_keys(const std::string& section)
{
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"cage", {"curve", "M", "delta", "wire", "model", "bc", "start"}},
        {"source", {"z0", "k", "equation"}},
        {"sweep", {"variable", "from", "to", "count", "spacing", "models", "probes", "quantity"}},
        {"grid", {"xmin", "xmax", "ymin", "ymax", "nx", "ny"}},
        {"resonance", {"mode", "gauge"}},
        {"peaks", {"deltas", "M", "mode", "window", "samples"}},
        {"discrete", {"P", "C", "symmetry", "farfield"}},
        {"output", {"name"}},
    };
    static const std::vector<std::string> none;
    auto it = keys.find(section);
    return it == keys.end() ? none : it->second;
}

/// Unknown sections and keys are errors, so typos do not pass silently.
inline void check_keys(const pt::ptree& t)
{
    for (const auto& [sec, body] : t) {
        const auto& allowed = known_keys(sec);
        if (allowed.empty()) bad(sec, "unknown section");
        for (const auto& [key, v] : body) {
            (void)v;
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) bad(sec + "." + key, "unknown key");
        }
    }
}

inline Common parse_common(const Reader& r)
{
    Common c;
    std::string curve = r.str("cage.curve", "circle");
    if (curve == "circle") c.cage.curve = Curve::UnitCircle;
    else if (curve == "square") c.cage.curve = Curve::UnitSquare;
    else bad("cage.curve", "expected circle or square");
    c.cage.M = r.integer("cage.M", 30);
    if (c.cage.M == 0) c.emptyCage = true;
    else if (c.cage.M < 3) bad("cage.M", "need M = 0 (no cage) or M >= 3");
    c.cage.delta = r.num("cage.delta", 0.1);
    if (!(c.cage.delta > 0.0)) bad("cage.delta", "must be positive");
    std::string wire = r.str("cage.wire", "disk");
    if (wire == "disk") c.cage.wireShape = WireShape::Disk;
    else if (wire == "square") c.cage.wireShape = WireShape::Square;
    else if (wire == "tangential") c.cage.wireShape = WireShape::TangentialSegment;
    else if (wire == "perpendicular") c.cage.wireShape = WireShape::PerpendicularSegment;
    else bad("cage.wire", "expected disk, square, tangential or perpendicular");
    if (!c.emptyCage && c.cage.delta >= delta_max(c.cage.wireShape)) bad("cage.delta", "wires overlap");
    std::string model = r.str("cage.model", "1");
    if (model == "1") c.cage.wireModel = WireModel::Model1;
    else if (model == "2") c.cage.wireModel = WireModel::Model2;
    else bad("cage.model", "expected 1 or 2");
    std::string bc = r.str("cage.bc", "dirichlet");
    if (bc == "dirichlet") c.cage.bc = BoundaryCondition::Dirichlet;
    else if (bc == "neumann") c.cage.bc = BoundaryCondition::Neumann;
    else bad("cage.bc", "expected dirichlet or neumann");
    c.cage.startArc = r.num("cage.start", 0.0);

    std::string eq = r.str("source.equation", "helmholtz");
    if (eq == "helmholtz") c.equation = Equation::Helmholtz;
    else if (eq == "laplace") c.equation = Equation::Laplace;
    else bad("source.equation", "expected helmholtz or laplace");
    c.k = r.num("source.k", 1.0);
    if (c.equation == Equation::Helmholtz && !(c.k > 0.0)) bad("source.k", "must be positive");
    c.z0 = to_point("source.z0", r.str("source.z0", "2"));

    c.discrete.P = r.integer("discrete.P", 10);
    if (c.discrete.P < 1 || c.discrete.P > 60) bad("discrete.P", "expected 1..60");
    c.discrete.C = r.integer("discrete.C", 0);
    if (c.discrete.C != 0 && c.discrete.C < 2 * c.discrete.P + 1) bad("discrete.C", "need C >= 2P+1");
    std::string sym = r.str("discrete.symmetry", "on");
    if (sym != "on" && sym != "off") bad("discrete.symmetry", "expected on or off");
    c.discrete.useSymmetry = sym == "on";
    std::string ff = r.str("discrete.farfield", "zero-charge");
    if (ff == "zero-charge") c.discrete.farField = LaplaceFarField::ZeroNetCharge;
    else if (ff == "grounded") c.discrete.farField = LaplaceFarField::Grounded;
    else bad("discrete.farfield", "expected zero-charge or grounded");
    c.name = r.str("output.name", c.name);
    if (c.name.empty() || c.name.find('/') != std::string::npos) bad("output.name", "must be a plain file stem");
    return c;
}

inline std::string crc_hex(const std::string& bytes)
{
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    std::ostringstream os;
    os << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();
    return os.str();
}

/// 1-based line of `section.key` in INI text, 0 when absent.
inline int locate_field(const std::string& text, const std::string& field)
{
    auto dot = field.find('.');
    std::string sec = field.substr(0, dot), key = dot == std::string::npos ? "" : field.substr(dot + 1);
    std::istringstream is(text);
    std::string line, current;
    int n = 0, sectionLine = 0;
    while (std::getline(is, line)) {
        ++n;
        std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            current = trim(t.substr(1, t.size() - 2));
            if (current == sec && key.empty()) return n;
            if (current == sec) sectionLine = n;
            continue;
        }
        auto eq = t.find('=');
        if (current == sec && eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
    }
    return sectionLine;
}

/// Run a parser; field errors gain the line they refer to.
template <class F>
auto with_lines(const std::string& text, F parse)
{
    try {
        return parse();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ConfigError || e.index() >= 0) throw;
        std::string what = e.what();
        auto a = what.find("field '");
        if (a == std::string::npos) throw;
        auto b = what.find('\'', a + 7);
        int line = locate_field(text, what.substr(a + 7, b - a - 7));
        if (line == 0) throw;
        throw Error(ErrorKind::ConfigError, "line " + std::to_string(line) + ": " + what.substr(what.find(": ") + 2),
                    0.0, line);
    }
}

} // namespace detail

/// Parse INI text. Syntax errors and bad fields throw ConfigError carrying
/// the line (for syntax) or the section.key name.
inline boost::property_tree::ptree read_config_text(const std::string& text)
{
    boost::property_tree::ptree t;
    std::istringstream is(text);
    try {
        boost::property_tree::read_ini(is, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::ConfigError, "line " + std::to_string(e.line()) + ": " + e.message(), 0.0,
                    static_cast<int>(e.line()));
    }
    detail::check_keys(t);
    return t;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::vector<Model> parse_models(const std::string& v)
{
    std::vector<Model> out;
    for (const auto& m : detail::split(v, ',')) {
        if (m == "discrete") out.push_back(Model::Discrete);
        else if (m == "thin") out.push_back(Model::Thin);
        else if (m == "thick") out.push_back(Model::Thick);
        else if (m == "resonance") out.push_back(Model::Resonance);
        else if (m == "neumann-shell") out.push_back(Model::NeumannShell);
        else detail::bad("sweep.models", "unknown model '" + m + "'");
    }
    if (out.empty()) detail::bad("sweep.models", "empty model list");
    return out;
}

namespace detail {
inline SweepSpec parse_sweep_fields(const std::string& text)
{
    auto t = read_config_text(text);
    detail::Reader r(t);
    SweepSpec s;
    s.common = detail::parse_common(r);
    s.common.hash = detail::crc_hex(text);
    s.hasSweep = r.has_section("sweep");
    if (s.hasSweep) {
        std::string var = r.str("sweep.variable", "k");
        if (var == "k") s.variable = SweepVar::K;
        else if (var == "delta") s.variable = SweepVar::Delta;
        else if (var == "M") s.variable = SweepVar::M;
        else detail::bad("sweep.variable", "expected k, delta or M");
        s.from = detail::to_double("sweep.from", r.required("sweep.from"));
        s.to = detail::to_double("sweep.to", r.required("sweep.to"));
        s.count = r.integer("sweep.count", 2);
        if (s.count < 2) detail::bad("sweep.count", "need at least 2 samples");
        if (s.from == s.to) detail::bad("sweep.to", "range is empty (from == to)");
        std::string sp = r.str("sweep.spacing", "linear");
        if (sp == "linear") s.spacing = Spacing::Linear;
        else if (sp == "log") s.spacing = Spacing::Log;
        else detail::bad("sweep.spacing", "expected linear or log");
        if (s.spacing == Spacing::Log && !(s.from > 0 && s.to > 0)) detail::bad("sweep.spacing", "log needs a positive range");
        if (s.variable == SweepVar::K && s.common.equation == Equation::Laplace)
            detail::bad("sweep.variable", "a k sweep needs equation = helmholtz");
        s.models = parse_models(r.str("sweep.models", "discrete"));
        for (const auto& p : detail::split(r.str("sweep.probes", "0"), ';'))
            s.probes.push_back({detail::to_point("sweep.probes", p), detail::format_probe(detail::to_point("sweep.probes", p))});
        std::string q = r.str("sweep.quantity", s.common.equation == Equation::Laplace ? "grad" : "abs");
        if (q != "abs" && q != "grad") detail::bad("sweep.quantity", "expected abs or grad");
        s.gradient = q == "grad";
    }
    if (r.has_section("peaks")) {
        PeakTableSpec p;
        for (const auto& d : detail::split(r.required("peaks.deltas"), ',')) p.deltas.push_back(detail::to_double("peaks.deltas", d));
        for (const auto& m : detail::split(r.required("peaks.M"), ',')) p.Ms.push_back(detail::to_int("peaks.M", m));
        auto mode = detail::split(r.str("peaks.mode", "0,1"), ',');
        if (mode.size() != 2) detail::bad("peaks.mode", "expected 'm,q'");
        p.modeM = detail::to_int("peaks.mode", mode[0]);
        p.modeQ = detail::to_int("peaks.mode", mode[1]);
        p.window = r.num("peaks.window", 0.03);
        p.samples = r.integer("peaks.samples", 31);
        if (p.samples < 5) detail::bad("peaks.samples", "need at least 5");
        for (int M : p.Ms)
            if (M < 3) detail::bad("peaks.M", "need M >= 3");
        s.peaks = p;
    }
    if (!s.hasSweep && !s.peaks) detail::bad("sweep", "config needs a [sweep] or [peaks] section");
    return s;
}
} // namespace detail

inline SweepSpec parse_sweep(const std::string& text)
{
    return detail::with_lines(text, [&] { return detail::parse_sweep_fields(text); });
}

namespace detail {
inline GridSpec parse_grid_fields(const std::string& text)
{
    auto t = read_config_text(text);
    detail::Reader r(t);
    GridSpec g;
    g.common = detail::parse_common(r);
    g.common.hash = detail::crc_hex(text);
    g.xmin = r.num("grid.xmin", -2);
    g.xmax = r.num("grid.xmax", 2);
    g.ymin = r.num("grid.ymin", -2);
    g.ymax = r.num("grid.ymax", 2);
    g.nx = r.integer("grid.nx", 81);
    g.ny = r.integer("grid.ny", 81);
    if (g.nx < 2 || g.ny < 2) detail::bad("grid.nx", "need at least 2 points per axis");
    if (!(g.xmax > g.xmin) || !(g.ymax > g.ymin)) detail::bad("grid.xmax", "empty grid window");
    return g;
}
} // namespace detail

inline GridSpec parse_grid(const std::string& text)
{
    return detail::with_lines(text, [&] { return detail::parse_grid_fields(text); });
}

namespace detail {
inline ResonanceSpec parse_resonance_fields(const std::string& text)
{
    auto t = read_config_text(text);
    detail::Reader r(t);
    ResonanceSpec s;
    s.common = detail::parse_common(r);
    s.common.hash = detail::crc_hex(text);
    if (s.common.emptyCage) detail::bad("cage.M", "a resonance report needs a cage");
    auto mode = detail::split(r.str("resonance.mode", s.common.cage.curve == Curve::UnitSquare ? "1,1" : "0,1"), ',');
    if (mode.size() != 2) detail::bad("resonance.mode", "expected two indices");
    s.i1 = detail::to_int("resonance.mode", mode[0]);
    s.i2 = detail::to_int("resonance.mode", mode[1]);
    s.gauge = r.num("resonance.gauge", 0.0);
    return s;
}
} // namespace detail

inline ResonanceSpec parse_resonance(const std::string& text)
{
    return detail::with_lines(text, [&] { return detail::parse_resonance_fields(text); });
}

// ---------------------------------------------------------------------------
// Models

/// Kinds recorded as a row flag rather than aborting the sweep.
inline bool is_regime_flag(ErrorKind k)
{
    switch (k) {
    case ErrorKind::NearResonance:
    case ErrorKind::InvalidRegime:
    case ErrorKind::RegimeWarning:
    case ErrorKind::InsideWire:
    case ErrorKind::OutOfReach:
    case ErrorKind::NotImplemented:
    case ErrorKind::DomainError:
    case ErrorKind::WireOverlap: return true;
    default: return false;
    }
}

struct Sample {
    double value = 0.0; ///< sweep variable
    double k = 0.0;
    CageConfig cage;
    bool emptyCage = false;
};

struct ModelOutput {
    std::vector<double> values; ///< one per probe
    std::string flag = "ok";
};

struct Row {
    Sample sample;
    std::vector<ModelOutput> models;
};

struct SolverFailure : std::runtime_error {
    SolverFailure(std::size_t idx, const std::string& what) : std::runtime_error(what), index(idx) {}
    std::size_t index;
};

/// Cell constants for the cage wires, memoised per (shape, delta).
struct CellCache {
    struct Entry {
        double sigma, tau, sigmaTilde1;
        std::optional<double> sigmaTilde2;
        double lambda;
        std::string source;
    };

    Entry get(WireShape shape, double delta, bool needLambda)
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(static_cast<int>(shape), delta, needLambda);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Entry e{};
        if (shape == WireShape::Disk) {
            auto d = disk_dirichlet(delta);
            e.sigma = d.sigma;
            e.tau = d.tau;
            e.sigmaTilde1 = disk_dirichlet_tilde(delta, WireModel::Model1).sigmaTilde;
            e.sigmaTilde2 = disk_dirichlet_tilde(delta, WireModel::Model2).sigmaTilde;
            e.source = "disk multipole cell solve";
        } else if (shape == WireShape::TangentialSegment || shape == WireShape::PerpendicularSegment) {
            auto c = cell_dirichlet_analytic(shape, delta);
            e.sigma = c.sigmaMinus;
            e.tau = c.tauPlus;
            e.sigmaTilde1 = 0.0;
            e.source = "closed form (conformal map); curvature constant not available, set to 0";
        } else {
            auto c = cell_dirichlet_numeric(shape, delta);
            e.sigma = c.constants.sigmaMinus;
            e.tau = c.constants.tauPlus;
            e.sigmaTilde1 = 0.0;
            e.source = "finite-volume strip solve; curvature constant not available, set to 0";
        }
        if (needLambda) e.lambda = cell_neumann(shape, delta).lambda;
        cache_.emplace(key, e);
        return e;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, double, bool>, Entry> cache_;
};

inline std::vector<double> sample_points(double from, double to, int n, Spacing sp)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / (n - 1);
        v[i] = sp == Spacing::Linear ? from + t * (to - from) : from * std::pow(to / from, t);
    }
    return v;
}

/// The Dirichlet modes the resonance model tracks: simple modes only.
inline std::vector<ModeSpec> resonance_modes(Curve curve, double kMin, double kMax)
{
    std::vector<ModeSpec> out;
    if (curve == Curve::UnitCircle) {
        for (auto& m : find_resonances(curve, std::max(1e-3, kMin), kMax))
            if (!m.degenerate) out.push_back(m);
    } else {
        ModeSpec s = square_mode(1, 1);
        if (s.kStar >= kMin && s.kStar <= kMax) out.push_back(s);
    }
    return out;
}

inline ResonanceReport build_report(const ModeSpec& mode, const CageConfig& cage, cplx z0, const CellCache::Entry& cell,
                                    double gauge = 0.0)
{
    ResonanceInputs in;
    in.sigmaMinus = cell.sigma;
    in.tauPlus = in.tauMinus = cell.tau;
    in.epsilon = perimeter(cage.curve) / cage.M;
    in.sigmaTildeMinus = cell.sigmaTilde1;
    in.sigmaTildeModel2 = cell.sigmaTilde2;
    bool interior = mode.geometry == Curve::UnitCircle ? std::abs(z0) < 1.0
                                                       : std::max(std::abs(z0.real()), std::abs(z0.imag())) < 1.0;
    if (mode.geometry == Curve::UnitCircle) {
        auto mi = circle_mode_integrals(mode, IntegralMethod::ClosedForm, gauge);
        if (interior) return second_order(mode, in, mi, ForcingKind::Interior, source_integral_I8(mode, z0));
        return second_order(mode, in, mi, ForcingKind::Exterior, source_integral_I7(mode, z0));
    }
    if (!interior) throw Error(ErrorKind::NotImplemented, "square cage resonance needs an interior source");
    return second_order(mode, in, square_mode_integrals(mode), ForcingKind::Interior, source_integral_I8(mode, z0));
}

inline bool inside_curve(Curve c, cplx z)
{
    return c == Curve::UnitCircle ? std::abs(z) < 1.0 : std::max(std::abs(z.real()), std::abs(z.imag())) < 1.0;
}

inline ModelOutput run_model(Model model, const SweepSpec& spec, const Sample& s, CellCache& cells)
{
    const Common& c = spec.common;
    ModelOutput out;
    out.values.assign(spec.probes.size(), std::numeric_limits<double>::quiet_NaN());
    auto flag = [&](const std::string& f) {
        if (out.flag == "ok") out.flag = f;
    };
    const double k = s.k;
    const bool helm = c.equation == Equation::Helmholtz;
    try {
        switch (model) {
        case Model::Discrete: {
            CageGeometry g = s.emptyCage ? empty_cage() : build_cage(s.cage);
            DiscreteSolution sol = solve_discrete(c.equation, g, k, c.z0, c.discrete);
            for (std::size_t p = 0; p < spec.probes.size(); ++p) {
                try {
                    cplx z = spec.probes[p].z;
                    out.values[p] = spec.gradient ? gradient_magnitude(evaluate_gradient(sol, z)) : std::abs(evaluate(sol, z));
                } catch (const Error& e) {
                    if (!is_regime_flag(e.kind())) throw;
                    flag(to_string(e.kind()));
                }
            }
            break;
        }
        case Model::Thin:
        case Model::Thick: {
            if (s.emptyCage || s.cage.curve != Curve::UnitCircle)
                throw Error(ErrorKind::NotImplemented, "outer series exist for the circle only");
            if (s.cage.bc != BoundaryCondition::Dirichlet)
                throw Error(ErrorKind::NotImplemented, "thin/thick models are Dirichlet");
            double eps = perimeter(s.cage.curve) / s.cage.M;
            OuterSeries ser;
            if (model == Model::Thin) {
                auto a = alpha_of(s.cage.delta, log_capacity_a0(s.cage.wireShape), eps);
                ser = helm ? helmholtz_thin_interior(k, c.z0, a.alpha) : laplace_thin_interior(c.z0, a.alpha);
            } else {
                auto cell = cells.get(s.cage.wireShape, s.cage.delta, false);
                ser = helm ? helmholtz_thick_interior(k, c.z0, cell.tau, eps) : laplace_thick_interior(c.z0, cell.tau, eps);
            }
            for (std::size_t p = 0; p < spec.probes.size(); ++p) {
                cplx z = spec.probes[p].z;
                if (std::abs(z) >= 1.0) {
                    flag("OutOfReach");
                    continue;
                }
                if (spec.gradient) out.values[p] = ser.gradient_at(std::abs(z), std::arg(z));
                else if (!helm) flag("NotImplemented"); // the Laplace outer constant is not modelled
                else out.values[p] = std::abs(ser.value_at(std::abs(z), std::arg(z)));
            }
            break;
        }
        case Model::Resonance: {
            if (!helm) throw Error(ErrorKind::DomainError, "resonance model needs the Helmholtz equation");
            if (s.emptyCage || s.cage.bc != BoundaryCondition::Dirichlet)
                throw Error(ErrorKind::NotImplemented, "resonance model needs a Dirichlet cage");
            auto cell = cells.get(s.cage.wireShape, s.cage.delta, false);
            auto modes = resonance_modes(s.cage.curve, k - 1.0, k + 1.0);
            if (modes.empty()) throw Error(ErrorKind::OutOfReach, "no simple mode within 1 of k");
            std::optional<ResonanceReport> best;
            for (const auto& m : modes) {
                auto r = build_report(m, s.cage, c.z0, cell);
                if (!best || std::abs(r.kPeak - k) < std::abs(best->kPeak - k)) best = r;
            }
            for (std::size_t p = 0; p < spec.probes.size(); ++p) {
                cplx z = spec.probes[p].z;
                if (!inside_curve(s.cage.curve, z) || spec.gradient) {
                    flag(spec.gradient ? "NotImplemented" : "OutOfReach");
                    continue;
                }
                out.values[p] = best->lorentzian_k(k) * best->interior_scale() * std::abs(mode_value(best->mode, z));
            }
            break;
        }
        case Model::NeumannShell: {
            if (s.emptyCage || s.cage.curve != Curve::UnitCircle)
                throw Error(ErrorKind::NotImplemented, "Neumann shell estimate for the circle only");
            if (helm || spec.gradient) throw Error(ErrorKind::NotImplemented, "Neumann shell column is the Laplace interior value");
            double eps = perimeter(s.cage.curve) / s.cage.M;
            auto cell = cells.get(s.cage.wireShape, s.cage.delta, true);
            auto est = neumann_shell(Equation::Laplace, k, c.z0, eps * cell.lambda);
            if (est.regimeWarning) flag("RegimeWarning");
            for (std::size_t p = 0; p < spec.probes.size(); ++p) {
                if (std::abs(spec.probes[p].z) >= 1.0) {
                    flag("OutOfReach");
                    continue;
                }
                out.values[p] = std::abs(est.interiorConstant);
            }
            break;
        }
        }
    } catch (const Error& e) {
        if (!is_regime_flag(e.kind())) throw;
        std::fill(out.values.begin(), out.values.end(), std::numeric_limits<double>::quiet_NaN());
        out.flag = to_string(e.kind());
    }
    return out;
}

/// Run fn(i) for i in [0, n) on a pool of worker threads. The first
/// exception (lowest index) is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, int threads, F fn)
{
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failIdx = n;
    std::exception_ptr fail;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < failIdx) {
                    failIdx = i;
                    fail = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (fail) std::rethrow_exception(fail);
}

inline std::vector<Sample> make_samples(const SweepSpec& spec)
{
    std::vector<Sample> out;
    for (double v : sample_points(spec.from, spec.to, spec.count, spec.spacing)) {
        Sample s;
        s.value = v;
        s.k = spec.common.k;
        s.cage = spec.common.cage;
        s.emptyCage = spec.common.emptyCage;
        switch (spec.variable) {
        case SweepVar::K: s.k = v; break;
        case SweepVar::Delta: s.cage.delta = v; break;
        case SweepVar::M:
            s.cage.M = static_cast<int>(std::lround(v));
            s.value = s.cage.M;
            s.emptyCage = false;
            break;
        }
        out.push_back(s);
    }
    return out;
}

inline std::vector<Row> run_rows(const SweepSpec& spec, int threads)
{
    auto samples = make_samples(spec);
    std::vector<Row> rows(samples.size());
    CellCache cells;
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        Row r;
        r.sample = samples[i];
        for (Model m : spec.models) {
            try {
                r.models.push_back(run_model(m, spec, samples[i], cells));
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "sample " << i << " (" << (spec.variable == SweepVar::K ? "k" : spec.variable == SweepVar::Delta ? "delta" : "M")
                   << "=" << std::setprecision(12) << samples[i].value << "), model " << to_string(m) << ": " << e.what();
                throw SolverFailure(i, os.str());
            }
        }
        rows[i] = std::move(r);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Output

inline std::string fmt12(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline const char* variable_name(SweepVar v)
{
    return v == SweepVar::K ? "k" : v == SweepVar::Delta ? "delta" : "M";
}

inline std::string sweep_csv(const SweepSpec& spec, const std::vector<Row>& rows)
{
    std::ostringstream os;
    os << "# config-hash=" << spec.common.hash << "\n";
    os << variable_name(spec.variable);
    const char* q = spec.gradient ? "grad" : "abs";
    for (Model m : spec.models) {
        for (const auto& p : spec.probes) os << "," << to_string(m) << ".z=" << p.label << "." << q;
        os << "," << to_string(m) << ".flag";
    }
    os << "\n";
    for (const Row& r : rows) {
        os << fmt12(r.sample.value);
        for (const auto& mo : r.models) {
            for (double v : mo.values) os << "," << fmt12(v);
            os << "," << mo.flag;
        }
        os << "\n";
    }
    return os.str();
}

inline json report_json(const ResonanceReport& r, const std::string& cellSource)
{
    auto c2 = [](cplx z) { return json::array({z.real(), z.imag()}); };
    json j;
    j["mode"] = {{"geometry", to_string(r.mode.geometry)},
                 {"bc", r.mode.bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann"},
                 {"indices", json::array({r.mode.i1, r.mode.i2})},
                 {"kStar", r.mode.kStar},
                 {"normalization", r.mode.normalization()}};
    j["forcing"] = r.forcing == ForcingKind::Exterior ? "exterior" : "interior";
    j["epsilon"] = r.inputs.epsilon;
    j["constants"] = {
        {"sigmaMinus", {{"value", r.inputs.sigmaMinus}, {"provenance", "computed: " + cellSource}}},
        {"tauPlus", {{"value", r.inputs.tauPlus}, {"provenance", "computed: " + cellSource}}},
        {"tauMinus", {{"value", r.inputs.tauMinus}, {"provenance", "computed: equal to tauPlus for a symmetric wire"}}},
        {"sigmaTildeMinus", {{"value", r.inputs.sigmaTildeMinus}, {"provenance", "computed: wire Model 1"}}},
    };
    if (r.inputs.sigmaTildeModel2)
        j["constants"]["sigmaTildeMinusModel2"] = {{"value", *r.inputs.sigmaTildeModel2}, {"provenance", "computed: wire Model 2"}};
    j["integrals"] = {{"I1", {{"value", r.I1}, {"provenance", "computed"}}},
                      {"I2", {{"value", r.I2}, {"provenance", "computed"}}},
                      {"I3", {{"value", r.I3}, {"provenance", "computed"}}},
                      {"I4", {{"value", c2(r.I4)}, {"provenance", r.I4Source}}},
                      {"I5", {{"value", r.I5}, {"provenance", r.mode.geometry == Curve::UnitSquare ? "not available, set to 0" : "computed"}}},
                      {"I6", {{"value", r.I6}, {"provenance", r.mode.geometry == Curve::UnitSquare ? "not available, set to 0" : "computed"}}}};
    if (r.forcing == ForcingKind::Exterior) j["integrals"]["I7"] = {{"value", c2(r.I7)}, {"provenance", "computed"}};
    else j["integrals"]["I8"] = {{"value", r.I8}, {"provenance", "computed"}};
    j["kTildeStar"] = r.kTildeStar;
    j["kTildeTildeStar"] = r.kTildeTildeStar;
    if (r.kTildeTildeStarModel2) j["kTildeTildeStarModel2"] = *r.kTildeTildeStarModel2;
    j["kPeakFirstOrder"] = r.kPeakFirstOrder;
    j["kPeak"] = r.kPeak;
    j["width"] = r.width;
    j["peakAmplitude"] = r.peakAmplitude;
    j["interiorScale"] = r.interior_scale();
    j["fwhmK"] = r.fwhm_k();
    return j;
}

/// Global argmax and interior local maxima of each column.
inline json column_peaks(const std::vector<Row>& rows, std::size_t mi, std::size_t pi)
{
    json j;
    double bestV = -1.0, bestX = 0.0;
    json locals = json::array();
    auto at = [&](std::size_t i) { return rows[i].models[mi].values[pi]; };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double v = at(i);
        if (!std::isfinite(v)) continue;
        if (v > bestV) {
            bestV = v;
            bestX = rows[i].sample.value;
        }
        if (i > 0 && i + 1 < rows.size() && std::isfinite(at(i - 1)) && std::isfinite(at(i + 1)) && v > at(i - 1) &&
            v >= at(i + 1))
            locals.push_back({{"at", rows[i].sample.value}, {"value", v}});
    }
    if (bestV < 0) {
        j["argmax"] = nullptr;
        j["max"] = nullptr;
    } else {
        j["argmax"] = bestX;
        j["max"] = bestV;
    }
    j["localMaxima"] = locals;
    return j;
}

struct PeakEntry {
    double delta;
    int M;
    double epsilon;
    double kPeakDiscrete, peakDiscrete;
    std::optional<ResonanceReport> report;
    std::string note;
};

inline std::vector<PeakEntry> run_peak_table(const SweepSpec& spec, int threads)
{
    const auto& p = *spec.peaks;
    const Common& c = spec.common;
    std::vector<std::pair<double, int>> jobs;
    for (double d : p.deltas)
        for (int M : p.Ms) jobs.emplace_back(d, M);
    std::vector<PeakEntry> out(jobs.size());
    CellCache cells;
    cplx probe = spec.probes.empty() ? cplx(0.0) : spec.probes.front().z;
    ModeSpec mode = c.cage.curve == Curve::UnitCircle ? circle_mode(p.modeM, p.modeQ) : square_mode(p.modeM, p.modeQ);
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        PeakEntry e{};
        e.delta = jobs[i].first;
        e.M = jobs[i].second;
        CageConfig cfg = c.cage;
        cfg.delta = e.delta;
        cfg.M = e.M;
        CageGeometry g = build_cage(cfg);
        e.epsilon = g.epsilon;
        double centre = mode.kStar;
        try {
            auto cell = cells.get(cfg.wireShape, cfg.delta, false);
            e.report = build_report(mode, cfg, c.z0, cell);
            centre = e.report->kPeak;
        } catch (const Error& err) {
            if (!is_regime_flag(err.kind()) && err.kind() != ErrorKind::DegenerateMode) throw;
            e.note = err.what();
        }
        try {
            Peak pk = find_peak(discrete_response(g, c.z0, probe, c.discrete), centre - p.window, centre + p.window,
                                p.samples, false, 1e-9);
            e.kPeakDiscrete = pk.k;
            e.peakDiscrete = pk.value;
        } catch (const std::exception& ex) {
            throw SolverFailure(i, std::string("peak table delta=") + fmt12(e.delta) + " M=" + std::to_string(e.M) +
                                       ": " + ex.what());
        }
        out[i] = e;
    });
    return out;
}

inline json peak_table_json(const std::vector<PeakEntry>& entries)
{
    json arr = json::array();
    for (const auto& e : entries) {
        json j{{"delta", e.delta}, {"M", e.M}, {"epsilon", e.epsilon}, {"kPeakDiscrete", e.kPeakDiscrete},
               {"peakDiscrete", e.peakDiscrete}};
        if (e.report) {
            j["kPeakPredicted"] = e.report->kPeak;
            j["kPeakFirstOrder"] = e.report->kPeakFirstOrder;
            j["peakAmplitude"] = e.report->peakAmplitude;
        } else {
            j["kPeakPredicted"] = nullptr;
            j["note"] = e.note;
        }
        arr.push_back(j);
    }
    return arr;
}

inline std::string peak_table_csv(const std::string& hash, const std::vector<PeakEntry>& entries)
{
    std::ostringstream os;
    os << "# config-hash=" << hash << "\n";
    os << "delta,M,epsilon,discrete.k_peak,discrete.peak,resonance.k_peak,resonance.k_peak_first_order\n";
    for (const auto& e : entries) {
        os << fmt12(e.delta) << "," << e.M << "," << fmt12(e.epsilon) << "," << fmt12(e.kPeakDiscrete) << ","
           << fmt12(e.peakDiscrete) << "," << fmt12(e.report ? e.report->kPeak : NAN) << ","
           << fmt12(e.report ? e.report->kPeakFirstOrder : NAN) << "\n";
    }
    return os.str();
}

inline json sweep_summary(const SweepSpec& spec, const std::vector<Row>& rows)
{
    json j;
    j["configHash"] = spec.common.hash;
    if (!spec.hasSweep) return j;
    j["variable"] = variable_name(spec.variable);
    j["samples"] = rows.size();
    json cols = json::object();
    const char* q = spec.gradient ? "grad" : "abs";
    for (std::size_t m = 0; m < spec.models.size(); ++m)
        for (std::size_t p = 0; p < spec.probes.size(); ++p) {
            json col = column_peaks(rows, m, p);
            std::size_t flagged = 0;
            for (const auto& r : rows) flagged += r.models[m].flag != "ok";
            col["flaggedRows"] = flagged;
            cols[std::string(to_string(spec.models[m])) + ".z=" + spec.probes[p].label + "." + q] = col;
        }
    j["columns"] = cols;
    // unperturbed resonances in range, for marker lines
    if (spec.variable == SweepVar::K && !spec.common.emptyCage) {
        double lo = std::min(spec.from, spec.to), hi = std::max(spec.from, spec.to);
        json ks = json::array();
        for (const auto& m : find_resonances(spec.common.cage.curve, lo, hi))
            ks.push_back({{"indices", json::array({m.i1, m.i2})}, {"kStar", m.kStar}, {"degenerate", m.degenerate}});
        j["unperturbedResonances"] = ks;
    }
    if (std::find(spec.models.begin(), spec.models.end(), Model::Resonance) != spec.models.end() &&
        spec.common.equation == Equation::Helmholtz && !spec.common.emptyCage) {
        CellCache cells;
        double lo = spec.variable == SweepVar::K ? std::min(spec.from, spec.to) : spec.common.k - 1.0;
        double hi = spec.variable == SweepVar::K ? std::max(spec.from, spec.to) : spec.common.k + 1.0;
        json reps = json::array();
        auto cell = cells.get(spec.common.cage.wireShape, spec.common.cage.delta, false);
        for (const auto& m : resonance_modes(spec.common.cage.curve, lo, hi)) {
            try {
                reps.push_back(report_json(build_report(m, spec.common.cage, spec.common.z0, cell), cell.source));
            } catch (const Error& e) {
                if (!is_regime_flag(e.kind())) throw;
            }
        }
        j["resonanceReports"] = reps;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Grid

inline std::string grid_csv(const GridSpec& spec, int threads)
{
    const Common& c = spec.common;
    CageGeometry g = c.emptyCage ? empty_cage() : build_cage(c.cage);
    DiscreteSolution sol;
    try {
        sol = solve_discrete(c.equation, g, c.k, c.z0, c.discrete);
    } catch (const std::exception& e) {
        throw SolverFailure(0, std::string("grid solve: ") + e.what());
    }
    std::vector<std::string> lines(static_cast<std::size_t>(spec.nx) * spec.ny);
    parallel_for(static_cast<std::size_t>(spec.ny), threads, [&](std::size_t jy) {
        double y = spec.ymin + (spec.ymax - spec.ymin) * jy / (spec.ny - 1);
        for (int ix = 0; ix < spec.nx; ++ix) {
            double x = spec.xmin + (spec.xmax - spec.xmin) * ix / (spec.nx - 1);
            cplx v(NAN, NAN);
            cplx z(x, y);
            if (z != c.z0) {
                try {
                    v = evaluate(sol, z);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::InsideWire) throw;
                }
            }
            lines[jy * spec.nx + ix] = fmt12(x) + "," + fmt12(y) + "," + fmt12(v.real()) + "," + fmt12(v.imag()) +
                                       "," + fmt12(std::abs(v));
        }
    });
    std::ostringstream os;
    os << "# config-hash=" << c.hash << "\n";
    os << "x,y,discrete.re,discrete.im,discrete.abs\n";
    for (const auto& l : lines) os << l << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Resonance report

inline json resonance_report(const ResonanceSpec& spec)
{
    const Common& c = spec.common;
    CellCache cells;
    bool neumann = c.cage.bc == BoundaryCondition::Neumann;
    ModeSpec mode = c.cage.curve == Curve::UnitCircle ? circle_mode(spec.i1, spec.i2, c.cage.bc)
                                                      : square_mode(spec.i1, spec.i2, c.cage.bc);
    json j;
    j["configHash"] = c.hash;
    if (neumann) {
        auto cell = cells.get(c.cage.wireShape, c.cage.delta, true);
        double eps = perimeter(c.cage.curve) / c.cage.M;
        auto r = neumann_resonance(mode, eps * cell.lambda);
        auto b = mode_integrals_basic(mode);
        j["mode"] = {{"geometry", to_string(mode.geometry)}, {"bc", "neumann"},
                     {"indices", json::array({mode.i1, mode.i2})}, {"kStar", mode.kStar}};
        j["epsilon"] = eps;
        j["lambda"] = {{"value", cell.lambda}, {"provenance", "computed: Neumann cell problem"}};
        j["epsLambda"] = r.amplitudeScale;
        j["I1"] = b.I1;
        j["I2"] = b.I2;
        j["shift"] = r.shift;
        j["kShifted"] = r.kShifted;
        j["regimeWarning"] = r.regimeWarning;
        return j;
    }
    auto cell = cells.get(c.cage.wireShape, c.cage.delta, false);
    j["report"] = report_json(build_report(mode, c.cage, c.z0, cell, spec.gauge), cell.source);
    return j;
}

// ---------------------------------------------------------------------------
// Cell command

inline WireShape parse_shape(const std::string& s)
{
    if (s == "disk") return WireShape::Disk;
    if (s == "square") return WireShape::Square;
    if (s == "tangential") return WireShape::TangentialSegment;
    if (s == "perpendicular") return WireShape::PerpendicularSegment;
    throw Error(ErrorKind::ConfigError, "unknown wire shape '" + s + "'");
}

inline json cell_report(WireShape shape, double delta, BoundaryCondition bc, WireModel model)
{
    json j;
    j["shape"] = to_string(shape);
    j["delta"] = delta;
    j["model"] = model == WireModel::Model1 ? 1 : 2;
    if (bc == BoundaryCondition::Dirichlet) {
        j["bc"] = "dirichlet";
        FarFieldConstants f;
        std::string method;
        if (shape == WireShape::TangentialSegment || shape == WireShape::PerpendicularSegment) {
            f = cell_dirichlet_analytic(shape, delta);
            method = "closed form";
        } else {
            f = cell_dirichlet_numeric(shape, delta).constants;
            method = shape == WireShape::Disk ? "multipole" : "finite volume";
        }
        j["method"] = method;
        j["sigmaPlus"] = f.sigmaPlus;
        j["sigmaMinus"] = f.sigmaMinus;
        j["tauPlus"] = f.tauPlus;
        j["tauMinus"] = f.tauMinus;
        j["a0"] = log_capacity_a0(shape);
        if (shape == WireShape::Disk && delta < 0.5) {
            auto t = cell_dirichlet_tilde(shape, delta, model);
            j["sigmaTilde"] = t.sigmaTilde;
            j["tauTilde"] = t.tauTilde;
        }
    } else {
        j["bc"] = "neumann";
        j["lambda"] = cell_neumann(shape, delta).lambda;
        try {
            auto h = cell_neumann_higher(shape, delta, model);
            j["muTilde"] = h.muTilde;
            j["muHat"] = h.muHat;
            j["muCheck"] = h.muCheck;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotImplemented) throw;
        }
    }
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& s)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot write '" + p.string() + "'");
    f << s;
}

} // namespace cagecalc::cli
