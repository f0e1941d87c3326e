#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <cagecalc/cli.hpp>

using namespace cagecalc;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path d = fs::temp_directory_path() / ("cagecalc_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& s)
{
    std::ofstream out(p, std::ios::binary);
    out << s;
}

struct Run {
    int code = -1;
    std::string out, err;
};

/// Run the tool in `dir` with stdout and stderr captured.
Run tool(const fs::path& dir, const std::string& args, const std::string& extra = "--quiet")
{
    fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    std::string cmd = std::string("\"") + CAGECALC_TOOL + "\" " + extra + " --out \"" + dir.string() + "\" " + args +
                      " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
    int raw = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

const char* kSmallSweep = R"([cage]
M = 12
delta = 0.1

[source]
z0 = 2

[sweep]
variable = k
from = 1.0
to = 1.0001
count = 2
models = discrete,thin,thick
probes = 0;0.3,0.2

[output]
name = small
)";

/// ConfigError message for a config text, or "" when it parses.
std::string sweep_error(const std::string& text)
{
    try {
        cli::parse_sweep(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        return e.what();
    }
    return "";
}

} // namespace

// ---------------------------------------------------------------------------
// parsing

TEST(ConfigParse, SmallSweep)
{
    auto s = cli::parse_sweep(kSmallSweep);
    EXPECT_EQ(s.common.cage.M, 12);
    EXPECT_EQ(s.common.equation, Equation::Helmholtz);
    EXPECT_EQ(s.count, 2);
    ASSERT_EQ(s.probes.size(), 2u);
    EXPECT_EQ(s.probes[1].z, cplx(0.3, 0.2));
    ASSERT_EQ(s.models.size(), 3u);
    EXPECT_EQ(s.common.name, "small");
    EXPECT_EQ(s.common.hash.size(), 8u);
    EXPECT_FALSE(s.gradient);
}

TEST(ConfigParse, ErrorsNameFieldAndLine)
{
    std::string text = kSmallSweep;
    std::string e = sweep_error(text + "colour = blue\n");
    EXPECT_NE(e.find("output.colour"), std::string::npos) << e;
    EXPECT_NE(e.find("line 18"), std::string::npos) << e;

    std::string bad = text;
    bad.replace(bad.find("M = 12"), 6, "M = twelve");
    e = sweep_error(bad);
    EXPECT_NE(e.find("cage.M"), std::string::npos) << e;
    EXPECT_NE(e.find("line 2"), std::string::npos) << e;

    bad = text;
    bad.replace(bad.find("count = 2"), 9, "count = 1");
    EXPECT_NE(sweep_error(bad).find("sweep.count"), std::string::npos);

    bad = text;
    bad.replace(bad.find("delta = 0.1"), 11, "delta = 0.6");
    EXPECT_NE(sweep_error(bad).find("cage.delta"), std::string::npos);

    EXPECT_NE(sweep_error("[cage]\nM = 12\n").find("sweep"), std::string::npos);
    EXPECT_NE(sweep_error("[cage\nM = 12\n").find("line 1"), std::string::npos);
    EXPECT_NE(sweep_error("[mystery]\nx = 1\n").find("mystery"), std::string::npos);
    EXPECT_NE(sweep_error("[source]\nequation = laplace\n[sweep]\nfrom = 1\nto = 2\n").find("sweep.variable"),
              std::string::npos);
}

TEST(ConfigParse, HashTracksBytes)
{
    std::string a = kSmallSweep, b = a + "\n";
    EXPECT_NE(cli::parse_sweep(a).common.hash, cli::parse_sweep(b).common.hash);
    EXPECT_EQ(cli::parse_sweep(a).common.hash, cli::parse_sweep(a).common.hash);
}

TEST(ConfigParse, SamplePoints)
{
    auto lin = cli::sample_points(1.0, 2.0, 5, cli::Spacing::Linear);
    EXPECT_EQ(lin.front(), 1.0);
    EXPECT_EQ(lin.back(), 2.0);
    EXPECT_DOUBLE_EQ(lin[1], 1.25);
    auto lg = cli::sample_points(0.001, 0.1, 3, cli::Spacing::Log);
    EXPECT_NEAR(lg[1], 0.01, 1e-15);
}

// ---------------------------------------------------------------------------
// in-process runs

TEST(SweepRun, ColumnsAndAdjacentSamples)
{
    auto spec = cli::parse_sweep(kSmallSweep);
    auto rows = cli::run_rows(spec, 2);
    std::string csv = cli::sweep_csv(spec, rows);
    auto cells = csv_rows(csv);
    ASSERT_EQ(cells.size(), 3u);
    EXPECT_EQ(csv.rfind("# config-hash=" + spec.common.hash + "\n", 0), 0u);
    std::vector<std::string> head = {"k",
                                     "discrete.z=0.abs",
                                     "discrete.z=0.3+0.2i.abs",
                                     "discrete.flag",
                                     "thin.z=0.abs",
                                     "thin.z=0.3+0.2i.abs",
                                     "thin.flag",
                                     "thick.z=0.abs",
                                     "thick.z=0.3+0.2i.abs",
                                     "thick.flag"};
    EXPECT_EQ(cells[0], head);
    EXPECT_EQ(cells[1][0], "1");
    EXPECT_EQ(cells[2][0], "1.0001");
    for (std::size_t c = 1; c < head.size(); ++c) {
        if (head[c].find(".flag") != std::string::npos) {
            EXPECT_EQ(cells[1][c], "ok");
            continue;
        }
        double a = std::stod(cells[1][c]), b = std::stod(cells[2][c]);
        EXPECT_GT(a, 0.0);
        EXPECT_NEAR(a, b, 1e-3 * a) << head[c];
    }
}

TEST(SweepRun, RegimeFlagsDoNotAbort)
{
    auto spec = cli::parse_sweep(R"([cage]
M = 20
delta = 0.01
[source]
z0 = 2
[sweep]
variable = k
from = 2.40
to = 2.41
count = 3
models = thick,resonance
)");
    auto rows = cli::run_rows(spec, 1);
    auto cells = csv_rows(cli::sweep_csv(spec, rows));
    ASSERT_EQ(cells.size(), 4u);
    bool nearRes = false;
    for (std::size_t r = 1; r < cells.size(); ++r) nearRes = nearRes || cells[r][2] == "NearResonance";
    EXPECT_TRUE(nearRes);
}

TEST(ResonanceRun, CircleProvenance)
{
    auto spec = cli::parse_resonance("[cage]\nM = 30\ndelta = 0.1\n[source]\nz0 = 2\n");
    json j = cli::resonance_report(spec);
    const auto& r = j.at("report");
    EXPECT_NEAR(r.at("mode").at("kStar").get<double>(), 2.404826, 1e-6);
    EXPECT_NE(r.at("constants").at("sigmaMinus").at("provenance").get<std::string>().find("computed"), std::string::npos);
    EXPECT_EQ(r.at("integrals").at("I1").at("provenance"), "computed");
    EXPECT_NEAR(r.at("kPeak").get<double>(), 2.3764, 1e-3);
}

TEST(ResonanceRun, SquareUsesTheFixture)
{
    auto spec = cli::parse_resonance("[cage]\ncurve = square\nM = 40\ndelta = 0.1\n[source]\nz0 = 0.3,0.2\n");
    json r = cli::resonance_report(spec).at("report");
    EXPECT_EQ(r.at("integrals").at("I4").at("provenance"), "fixture");
    EXPECT_EQ(r.at("forcing"), "interior");
    double tau = disk_dirichlet(0.1).tau;
    double I8 = r.at("integrals").at("I8").at("value").get<double>();
    EXPECT_NEAR(r.at("peakAmplitude").get<double>(), std::abs(I8) / (tau * tau * 16.02), 1e-9);
}

TEST(ResonanceRun, NeumannShift)
{
    auto spec = cli::parse_resonance(
        "[cage]\nM = 20\ndelta = 0.499\nwire = tangential\nbc = neumann\n[source]\nz0 = 2\n");
    json j = cli::resonance_report(spec);
    ModeSpec m = circle_mode(0, 1, BoundaryCondition::Neumann);
    auto b = mode_integrals_basic(m);
    double el = j.at("epsLambda").get<double>();
    EXPECT_NEAR(el, (2 * pi / 20) * (-std::log(std::cos(pi * 0.499)) / pi), 1e-12);
    EXPECT_NEAR(j.at("shift").get<double>(), b.I2 / (4 * m.kStar * b.I1) / el, 1e-12);
}

TEST(CellReport, TangentialClosedForm)
{
    json j = cli::cell_report(WireShape::TangentialSegment, 1.0 / 6, BoundaryCondition::Dirichlet, WireModel::Model1);
    EXPECT_NEAR(j.at("sigmaPlus").get<double>(), 0.110318, 1e-6);
    EXPECT_THROW(cli::parse_shape("triangle"), Error);
}

// ---------------------------------------------------------------------------
// the executable

TEST(Tool, SweepIsDeterministic)
{
    auto d1 = scratch("det1"), d2 = scratch("det2");
    spit(d1 / "small.ini", kSmallSweep);
    ASSERT_EQ(tool(d1, "sweep \"" + (d1 / "small.ini").string() + "\"", "--quiet --threads 1").code, 0);
    ASSERT_EQ(tool(d2, "sweep \"" + (d1 / "small.ini").string() + "\"", "--quiet --threads 3").code, 0);
    EXPECT_EQ(slurp(d1 / "small.csv"), slurp(d2 / "small.csv"));
    EXPECT_EQ(slurp(d1 / "small.json"), slurp(d2 / "small.json"));
    json j = json::parse(slurp(d1 / "small.json"));
    EXPECT_EQ(j.at("samples"), 2);
}

TEST(Tool, ExitCodes)
{
    auto d = scratch("codes");
    spit(d / "unknown.ini", "[cage]\nM = 30\n[grid]\nnx = 3\nbogus = 1\n");
    auto r = tool(d, "grid \"" + (d / "unknown.ini").string() + "\"");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 5"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("grid.bogus"), std::string::npos) << r.err;

    EXPECT_EQ(tool(d, "grid \"" + (d / "missing.ini").string() + "\"").code, 2);
    EXPECT_EQ(tool(d, "frobnicate").code, 2);

    // a source placed on a wire centre cannot be solved
    spit(d / "onwire.ini", "[cage]\nM = 30\n[source]\nz0 = 1\nk = 2\n[grid]\nnx = 3\nny = 3\n");
    r = tool(d, "grid \"" + (d / "onwire.ini").string() + "\"");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("InsideWire"), std::string::npos) << r.err;
}

TEST(Tool, EmptyCageGridIsTheFreeField)
{
    auto d = scratch("free");
    spit(d / "free.ini", "[cage]\nM = 0\n[source]\nk = 1.5\nz0 = 2\n[grid]\nxmin = -1\nxmax = 1\nymin = -1\nymax = 1\n"
                         "nx = 5\nny = 5\n[output]\nname = free\n");
    ASSERT_EQ(tool(d, "grid \"" + (d / "free.ini").string() + "\"").code, 0);
    auto rows = csv_rows(slurp(d / "free_grid.csv"));
    ASSERT_EQ(rows.size(), 26u);
    EXPECT_EQ(rows[0][2], "discrete.re");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        cplx z(std::stod(rows[i][0]), std::stod(rows[i][1]));
        cplx v(std::stod(rows[i][2]), std::stod(rows[i][3]));
        EXPECT_NEAR(std::abs(v - 0.25 * I * hankel1(0, 1.5 * std::abs(z - 2.0))), 0.0, 1e-10);
    }
}

TEST(Tool, GridMarksWireInteriors)
{
    auto d = scratch("wires");
    // a 3x3 grid centred on the wire at z = 1 with spacing below its radius
    spit(d / "w.ini", "[cage]\nM = 10\ndelta = 0.4\n[source]\nk = 1\nz0 = 3\n[grid]\nxmin = 0.9\nxmax = 1.1\n"
                      "ymin = -0.1\nymax = 0.1\nnx = 3\nny = 3\n[output]\nname = w\n");
    ASSERT_EQ(tool(d, "grid \"" + (d / "w.ini").string() + "\"").code, 0);
    auto rows = csv_rows(slurp(d / "w_grid.csv"));
    ASSERT_EQ(rows.size(), 10u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][4], "nan") << rows[i][0] << "," << rows[i][1];
}

TEST(Tool, CellCommand)
{
    auto d = scratch("cell");
    auto r = tool(d, "cell perpendicular 0.25");
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_NEAR(j.at("tauPlus").get<double>(), 0.0671488, 1e-7);
    EXPECT_EQ(tool(d, "cell disk 0.1 --bc robin").code, 2);
}

TEST(Tool, ShippedConfigsParse)
{
    for (const auto& e : fs::directory_iterator(fs::path(CAGECALC_SOURCE_DIR) / "configs")) {
        std::string text = slurp(e.path());
        std::string name = e.path().filename().string();
        if (name.rfind("resonance", 0) == 0)
            EXPECT_NO_THROW(cli::parse_resonance(text)) << name;
        else if (text.find("[grid]") != std::string::npos)
            EXPECT_NO_THROW(cli::parse_grid(text)) << name;
        else
            EXPECT_NO_THROW(cli::parse_sweep(text)) << name;
    }
}

// Pinned from the first run whose peaks were checked against the resonance
// prediction; any change to the discrete solver or peak search shows up here.
TEST(PeakTable, MatchesGoldenMaster)
{
    const fs::path src(CAGECALC_SOURCE_DIR);
    auto spec = cli::parse_sweep(slurp(src / "configs" / "peaks_circle.ini"));
    auto entries = cli::run_peak_table(spec, 1);

    std::istringstream golden(slurp(src / "tests" / "golden" / "peaks_circle_peaks.csv"));
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(golden, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'd') continue;
        std::vector<double> v;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) v.push_back(std::stod(cell));
        rows.push_back(v);
    }
    ASSERT_EQ(entries.size(), rows.size());
    ASSERT_EQ(entries.size(), 6u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& e = entries[i];
        const auto& g = rows[i];
        SCOPED_TRACE("delta=" + std::to_string(e.delta) + " M=" + std::to_string(e.M));
        ASSERT_TRUE(e.report.has_value());
        EXPECT_DOUBLE_EQ(e.delta, g[0]);
        EXPECT_EQ(e.M, static_cast<int>(g[1]));
        EXPECT_NEAR(e.kPeakDiscrete, g[3], 1e-9);
        EXPECT_NEAR(e.peakDiscrete, g[4], 1e-9 * g[4]);
        EXPECT_NEAR(e.report->kPeak, g[5], 1e-9);
        EXPECT_NEAR(e.report->kPeakFirstOrder, g[6], 1e-9);
    }
}
