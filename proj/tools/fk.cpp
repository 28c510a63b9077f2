// fk: command line front end for the experiment runner.
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fk/experiments.hpp"

namespace {

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size())
            throw std::invalid_argument("bad number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw std::invalid_argument("empty list");
    return out;
}

std::array<int, 2> parse_grid(const std::string& s)
{
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw std::invalid_argument("grid must look like 1024x512");
    std::size_t u0 = 0, u1 = 0;
    const int a = std::stoi(s.substr(0, x), &u0);
    const int b = std::stoi(s.substr(x + 1), &u1);
    if (u0 != x || u1 != s.size() - x - 1 || a <= 0 || b <= 0)
        throw std::invalid_argument("grid must look like 1024x512");
    return {a, b};
}

int report(const fk::RunOutcome& r)
{
    std::cout << "run directory: " << r.dir.string() << '\n';
    for (const auto& f : r.failures)
        std::cout << "FAILED check: " << f << '\n';
    std::cout << (r.exit_code == 0 ? "all checks passed" : "some checks failed") << '\n';
    return r.exit_code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Faber-Krahn minimisers on Riemannian surfaces"};
    app.require_subcommand(1);

    std::string config;
    bool allow = false;
    auto* solve = app.add_subcommand("solve", "Single volume-constrained minimisation");
    solve->add_option("--config", config, "JSON run configuration")->required();
    solve->add_flag("--allow-nonconverged", allow, "Do not fail on non-converged solves");

    auto* profile = app.add_subcommand("profile", "Faber-Krahn profile over a volume list");
    profile->add_option("--config", config, "JSON run configuration")->required();
    profile->add_flag("--allow-nonconverged", allow, "Do not fail on non-converged solves");

    fk::DriftConfig drift;
    std::string positions = "3,6,12,24,48", grid = "1024x512", out = "drift_run";
    auto* dr = app.add_subcommand("drift", "Geodesic balls drifting up the catenoid");
    auto* dr_config = dr->add_option("--config", config, "JSON run configuration (mode drift)");
    dr->add_option("--neck", drift.neck, "Catenoid neck radius")->capture_default_str();
    dr->add_option("--volume", drift.volume, "Ball area")->capture_default_str();
    dr->add_option("--positions", positions, "Comma separated centre heights")
        ->capture_default_str();
    dr->add_option("--grid", grid, "Chart grid n1xn2")->capture_default_str();
    dr->add_option("--truncation", drift.truncation, "Truncation height T")->capture_default_str();
    dr->add_option("--polar", drift.n_rho, "Radial elements of the polar mesh")
        ->capture_default_str();
    dr->add_option("--out", out, "Run directory")->capture_default_str();
    for (const char* flag : {"--neck", "--volume", "--positions", "--grid", "--truncation",
                             "--polar", "--out"})
        dr_config->excludes(dr->get_option(flag));

    std::string run_dir, format = "csv";
    auto* ex = app.add_subcommand("export", "Flat tables from a finished run");
    ex->add_option("--run", run_dir, "Run directory")->required();
    ex->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const int threads = fk::thread_count_from_env();
    try {
        if (solve->parsed() || profile->parsed() || dr_config->count() > 0) {
            auto cfg = fk::load_config(config);
            const auto want = solve->parsed()     ? fk::RunMode::solve
                              : profile->parsed() ? fk::RunMode::profile
                                                  : fk::RunMode::drift;
            if (cfg.mode != want)
                throw fk::ConfigError("mode", "config is for '" + fk::to_string(cfg.mode) +
                                                  "' but the command is '" +
                                                  fk::to_string(want) + "'");
            return report(fk::run_config(cfg, threads, allow));
        }
        if (dr->parsed()) {
            fk::RunConfig cfg;
            cfg.mode = fk::RunMode::drift;
            try {
                drift.positions = parse_list(positions);
            } catch (const std::exception& e) {
                throw fk::ConfigError("--positions", e.what());
            }
            try {
                drift.grid = parse_grid(grid);
            } catch (const std::exception& e) {
                throw fk::ConfigError("--grid", e.what());
            }
            cfg.drift = drift;
            cfg.output = out;
            return report(fk::run_config(cfg, threads));
        }
        for (const auto& p : fk::export_results(run_dir, format))
            std::cout << p.string() << '\n';
        return 0;
    } catch (const fk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
