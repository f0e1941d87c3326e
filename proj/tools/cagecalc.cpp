#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <cagecalc/acceptance.hpp>
#include <cagecalc/cli.hpp>

namespace fs = std::filesystem;
using namespace cagecalc;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

struct Flags {
    std::string out = ".";
    int threads = 0;
    bool quiet = false;
};

int threads_of(const Flags& f)
{
    if (f.threads > 0) return f.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

fs::path out_dir(const Flags& f)
{
    fs::path d(f.out);
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) throw Error(ErrorKind::ConfigError, "cannot create output directory '" + f.out + "'");
    return d;
}

void note(const Flags& f, const std::string& s)
{
    if (!f.quiet) std::cerr << s << "\n";
}

int cmd_sweep(const std::string& path, const Flags& f)
{
    std::string text = cli::read_file(path);
    auto spec = cli::parse_sweep(text);
    fs::path dir = out_dir(f);
    std::vector<cli::Row> rows;
    if (spec.hasSweep) {
        rows = cli::run_rows(spec, threads_of(f));
        cli::write_text(dir / (spec.common.name + ".csv"), cli::sweep_csv(spec, rows));
    }
    auto summary = cli::sweep_summary(spec, rows);
    if (spec.peaks) {
        auto table = cli::run_peak_table(spec, threads_of(f));
        summary["peakTable"] = cli::peak_table_json(table);
        cli::write_text(dir / (spec.common.name + "_peaks.csv"), cli::peak_table_csv(spec.common.hash, table));
    }
    cli::write_text(dir / (spec.common.name + ".json"), summary.dump(2) + "\n");
    note(f, "wrote " + (dir / spec.common.name).string() + ".{csv,json}");
    return 0;
}

int cmd_grid(const std::string& path, const Flags& f)
{
    std::string text = cli::read_file(path);
    auto spec = cli::parse_grid(text);
    fs::path dir = out_dir(f);
    cli::write_text(dir / (spec.common.name + "_grid.csv"), cli::grid_csv(spec, threads_of(f)));
    note(f, "wrote " + (dir / (spec.common.name + "_grid.csv")).string());
    return 0;
}

int cmd_resonance(const std::string& path, const Flags& f)
{
    std::string text = cli::read_file(path);
    auto spec = cli::parse_resonance(text);
    fs::path dir = out_dir(f);
    auto j = cli::resonance_report(spec);
    cli::write_text(dir / (spec.common.name + "_resonance.json"), j.dump(2) + "\n");
    if (!f.quiet) std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_cell(const std::string& shape, double delta, const std::string& bc, int model)
{
    if (bc != "dirichlet" && bc != "neumann") throw Error(ErrorKind::ConfigError, "--bc must be dirichlet or neumann");
    if (model != 1 && model != 2) throw Error(ErrorKind::ConfigError, "--model must be 1 or 2");
    auto j = cli::cell_report(cli::parse_shape(shape), delta,
                              bc == "dirichlet" ? BoundaryCondition::Dirichlet : BoundaryCondition::Neumann,
                              model == 1 ? WireModel::Model1 : WireModel::Model2);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_selftest(const Flags& f)
{
    bool all = true;
    for (const auto& c : acceptance::criteria()) {
        auto v = acceptance::run(c);
        all = all && v.pass;
        std::printf("[%s] %s: %s", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
        if (!f.quiet) std::printf(" (%.1fs)", v.seconds);
        std::printf("\n");
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cagecalc: two-dimensional Faraday cage shielding simulator"};
    app.require_subcommand(1);
    Flags flags;
    app.add_option("--out", flags.out, "output directory");
    app.add_option("--threads", flags.threads, "worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", flags.quiet, "suppress progress messages");

    std::string config;
    auto* sweep = app.add_subcommand("sweep", "run a k, delta or M sweep");
    sweep->add_option("config", config, "INI config file")->required();
    auto* grid = app.add_subcommand("grid", "export the discrete field on a rectangular grid");
    grid->add_option("config", config, "INI config file")->required();
    auto* res = app.add_subcommand("resonance", "resonance report for one mode");
    res->add_option("config", config, "INI config file")->required();

    std::string shape, bc = "dirichlet";
    double delta = 0.0;
    int model = 1;
    auto* cell = app.add_subcommand("cell", "far-field constants of one cell problem");
    cell->add_option("shape", shape, "disk | square | tangential | perpendicular")->required();
    cell->add_option("delta", delta, "scaled wire size")->required();
    cell->add_option("--bc", bc, "dirichlet | neumann");
    cell->add_option("--model", model, "wire model 1 or 2");
    auto* self = app.add_subcommand("selftest", "run the acceptance suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*sweep) return cmd_sweep(config, flags);
        if (*grid) return cmd_grid(config, flags);
        if (*res) return cmd_resonance(config, flags);
        if (*cell) return cmd_cell(shape, delta, bc, model);
        if (*self) return cmd_selftest(flags);
    } catch (const cli::SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolverError;
    } catch (const Error& e) {
        std::cerr << (e.kind() == ErrorKind::ConfigError ? "config error: " : "solver failure: ") << e.what() << "\n";
        return e.kind() == ErrorKind::ConfigError ? kConfigError : kSolverError;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolverError;
    }
    return 0;
}
