#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>

#include "fk/experiments.hpp"

namespace fk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json trace_json(const std::vector<TraceEntry>& trace)
{
    json out = json::array();
    for (const auto& t : trace)
        out.push_back({{"lambda", t.lambda},
                       {"volume", t.volume},
                       {"change", t.change},
                       {"accepted", t.accepted},
                       {"step", t.step}});
    return out;
}

json penalization_json(const PenalizationReport& r)
{
    json v = json::array();
    for (const auto& x : r.violations)
        v.push_back({{"candidate", x.candidate}, {"kind", x.kind}, {"lhs", x.lhs}, {"rhs", x.rhs}});
    return {{"mu_star", r.mu_star},
            {"fitted_mu", r.fitted_mu},
            {"candidates_tested", r.candidates_tested},
            {"min_slack", r.min_slack},
            {"violations", v}};
}

struct Checks {
    json table = json::object();
    std::vector<std::string> failures;

    void add(const std::string& name, bool ok)
    {
        table[name] = ok;
        if (!ok)
            failures.push_back(name);
    }
};

json run_diagnostics(const MetricChart& chart, const Grid& grid, const DiscreteOperatorPair& ops,
                     const ShapeResult& res, const DiagnosticsConfig& cfg, const std::string& tag,
                     Checks& checks)
{
    json out;
    const Point xc = grid.node(support_barycenter(chart, grid, res.support));
    const double h = physical_spacing(chart, grid, xc);
    const auto me = lagrange_multiplier_estimate(chart, grid, res, cfg.band_cells * h);
    out["multiplier"] = to_json(me);
    checks.add(tag + ".multiplier_positive", me.Lambda > 0.0);

    const auto pts = boundary_points(chart, grid, res.support, res.u, cfg.points);
    json weiss = json::array(), density = json::array();
    int skipped = 0;
    bool monotone = true, within = true;
    for (const Point& x0 : pts) {
        try {
            const auto radii = profile_radii(chart, grid, x0, cfg.radii, cfg.r_max);
            const auto wp = weiss_profile(chart, grid, ops, res.u, x0, radii, me.Lambda);
            const auto dr = density_profile(chart, grid, res.support, x0, radii);
            auto dj = to_json(dr);
            dj["formula_residual"] = density_formula_check(wp, dr);
            dj["Lambda_density"] = density_multiplier(wp, dr);
            weiss.push_back(to_json(wp));
            density.push_back(dj);
            monotone = monotone && wp.monotone;
            within = within && dr.all_within;
        } catch (const std::invalid_argument&) {
            ++skipped; // r0 below three cells
        } catch (const TruncationError&) {
            ++skipped;
        }
    }
    out["weiss"] = weiss;
    out["density"] = density;
    out["points_skipped"] = skipped;
    checks.add(tag + ".weiss_monotone", monotone && !weiss.empty());
    checks.add(tag + ".density_within", within && !density.empty());

    // balls up to half the radius of a flat disc of volume m
    const double r_hi = 0.5 * std::sqrt(res.m / std::numbers::pi);
    if (r_hi > 3.0 * h) {
        std::vector<double> rr;
        for (int k = 0; k < 6; ++k)
            rr.push_back(3.0 * h * std::pow(r_hi / (3.0 * h), k / 5.0));
        try {
            const auto nd = nondegeneracy_check(chart, grid, res, pts, rr);
            const auto gr = growth_bound_check(chart, grid, res, pts, rr);
            out["nondegeneracy"] = {{"c_emp", nd.c_emp}, {"c_point", nd.c_point}};
            out["growth"] = {{"C_emp", gr.C_emp}, {"samples", gr.samples}};
            checks.add(tag + ".nondegenerate", nd.c_emp > 0.0);
            checks.add(tag + ".growth_finite", std::isfinite(gr.C_emp));
        } catch (const TruncationError&) {
            out["nondegeneracy"] = nullptr;
        }
    }
    out["perimeter"] = perimeter_estimate(chart, grid, res.support);

    if (cfg.penalization_candidates > 0) {
        const auto rep = penalization_certificate(chart, grid, ops, res, std::nullopt,
                                                  cfg.penalization_candidates,
                                                  cfg.penalization_seed);
        out["penalization"] = penalization_json(rep);
        checks.add(tag + ".penalization", rep.violations.empty());
    }
    return out;
}

void write_profile_csv(std::ostream& os, const json& results)
{
    os << "m,FK,iterations,converged\n" << std::setprecision(17);
    for (const auto& r : results)
        os << r.at("m").get<double>() << ',' << r.at("lambda1").get<double>() << ','
           << r.at("iterations").get<int>() << ',' << (r.at("converged").get<bool>() ? 1 : 0)
           << '\n';
}

// reports rebuilt from manifest entries, enough for write_diagnostics_csv
void diagnostics_rows(const json& results, std::vector<WeissProfile>& w,
                      std::vector<DensityReport>& d)
{
    for (const auto& r : results) {
        if (!r.contains("diagnostics"))
            continue;
        const auto& dg = r["diagnostics"];
        for (const auto& x : dg.at("weiss")) {
            WeissProfile p;
            p.x0 = Point(x.at("x0")[0].get<double>(), x.at("x0")[1].get<double>());
            p.radii = x.at("radii").get<std::vector<double>>();
            p.phi = x.at("phi").get<std::vector<double>>();
            p.Lambda = x.at("Lambda");
            w.push_back(p);
        }
        for (const auto& x : dg.at("density")) {
            DensityReport p;
            p.x0 = Point(x.at("x0")[0].get<double>(), x.at("x0")[1].get<double>());
            p.radii = x.at("radii").get<std::vector<double>>();
            p.theta = x.at("theta").get<std::vector<double>>();
            d.push_back(p);
        }
    }
}

RunOutcome finish(const fs::path& dir, json manifest, Checks& checks, double seconds)
{
    manifest["checks"] = checks.table;
    RunOutcome out;
    out.dir = dir;
    out.failures = checks.failures;
    out.exit_code = checks.failures.empty() ? 0 : 1;
    manifest["passed"] = out.exit_code == 0;
    write_json(dir / "manifest.json", manifest);
    write_json(dir / "run_info.json", {{"timestamp", utc_timestamp()}, {"seconds", seconds}});
    export_results(dir, "csv");
    out.manifest = std::move(manifest);
    return out;
}

RunOutcome run_drift(const RunConfig& c, int threads)
{
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = c.output;
    fs::create_directories(dir);
    DriftOptions opts;
    opts.threads = threads;
    opts.polar.n_rho = c.drift.n_rho;
    opts.polar.n_psi = c.drift.n_psi;
    const auto d = run_catenoid_drift(c.drift.neck, c.drift.volume, c.drift.positions,
                                      c.drift.grid, c.drift.truncation, opts);
    json manifest = {{"schema_version", kSchemaVersion},
                     {"mode", "drift"},
                     {"config", to_json(c)},
                     {"threads", threads},
                     {"drift", to_json(d)}};
    Checks checks;
    checks.add("drift.decreasing", d.decreasing);
    checks.add("drift.above_floor", d.positive);
    checks.add("drift.volumes", d.volumes_ok);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish(dir, std::move(manifest), checks, s);
}

} // namespace

RunOutcome run_config(const RunConfig& c, int threads, bool allow_nonconverged)
{
    threads = std::max(1, threads);
    if (c.mode == RunMode::drift)
        return run_drift(c, threads);

    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = c.output;
    fs::create_directories(dir);
    const MetricChart chart = chart_from_json(c.chart);
    const Grid grid(chart, c.grid[0], c.grid[1]);
    const auto ops = assemble_operators(chart, grid);
    const Field vol = cell_volumes(chart, grid);
    const double cell = vol.maxCoeff();

    std::vector<ShapeResult> results;
    if (c.mode == RunMode::solve) {
        results.push_back(fk_minimize(chart, grid, ops, c.m, c.solver));
    } else {
        for (auto& e : fk_profile(chart, grid, c.volumes, c.solver, threads))
            results.push_back(std::move(e.result));
    }

    Checks checks;
    json rows = json::array();
    if (c.write_fields)
        fs::create_directories(dir / "fields");
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& r = results[k];
        const std::string tag = "result[" + std::to_string(k) + "]";
        const double energy = evaluate_J(ops, r.u, 0.0);
        json row = {{"m", r.m},
                    {"lambda1", r.lambda1},
                    {"volume", r.volume},
                    {"energy", energy},
                    {"cell_volume", cell},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"eigensolves", r.eigensolves},
                    {"ball_deviation", ball_deviation(chart, grid, r.support, r.m)},
                    {"trace", trace_json(r.trace)}};
        if (!allow_nonconverged)
            checks.add(tag + ".converged", r.converged);
        checks.add(tag + ".saturation", std::abs(r.volume - r.m) <= cell);
        checks.add(tag + ".consistency", std::abs(r.lambda1 - energy) <= 1e-3 * r.lambda1);
        if (c.diagnostics.enabled)
            row["diagnostics"] = run_diagnostics(chart, grid, ops, r, c.diagnostics, tag, checks);
        if (c.write_fields) {
            const std::string u = "fields/u_" + std::to_string(k) + ".csv";
            const std::string s = "fields/support_" + std::to_string(k) + ".csv";
            write_field_csv((dir / u).string(), grid, r.u);
            write_field_csv((dir / s).string(), grid, indicator_field(r.support));
            row["fields"] = {{"u", u}, {"support", s}};
        }
        rows.push_back(row);
    }
    if (c.mode == RunMode::profile) {
        // nonincreasing in m up to the shape tolerance
        std::vector<std::size_t> order(results.size());
        for (std::size_t k = 0; k < order.size(); ++k)
            order[k] = k;
        std::sort(order.begin(), order.end(),
                  [&](auto a, auto b) { return results[a].m < results[b].m; });
        bool mono = true;
        for (std::size_t k = 1; k < order.size(); ++k) {
            const double prev = results[order[k - 1]].lambda1;
            mono = mono && results[order[k]].lambda1 <= prev * (1.0 + 2.0 * c.solver.tol);
        }
        checks.add("profile.nonincreasing", mono);
    }

    json manifest = {{"schema_version", kSchemaVersion},
                     {"mode", to_string(c.mode)},
                     {"config", to_json(c)},
                     {"threads", threads},
                     {"chart", chart_to_json(chart)},
                     {"grid", c.grid},
                     {"results", rows}};
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish(dir, std::move(manifest), checks, s);
}

RunOutcome run_config(const fs::path& path, int threads, bool allow_nonconverged)
{
    return run_config(load_config(path), threads, allow_nonconverged);
}

std::vector<fs::path> export_results(const fs::path& run_dir, const std::string& format)
{
    if (format != "csv" && format != "json")
        throw std::invalid_argument("export format must be csv or json");
    const fs::path mpath = run_dir / "manifest.json";
    if (!fs::exists(mpath))
        throw std::runtime_error("no manifest found in " + run_dir.string());
    json manifest;
    {
        std::ifstream in(mpath);
        try {
            manifest = json::parse(in);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("unreadable manifest " + mpath.string() + ": " + e.what());
        }
    }

    std::vector<fs::path> written;
    std::vector<WeissProfile> weiss;
    std::vector<DensityReport> density;
    const bool has_results = manifest.contains("results");
    if (has_results)
        diagnostics_rows(manifest["results"], weiss, density);
    std::optional<DriftResult> drift;
    if (manifest.contains("drift"))
        drift = drift_from_json(manifest["drift"]);

    auto open = [&](const std::string& name) {
        written.push_back(run_dir / name);
        std::ofstream out(written.back());
        if (!out)
            throw std::runtime_error("cannot write " + written.back().string());
        return out;
    };

    if (format == "csv") {
        if (has_results) {
            auto out = open("fk_profile.csv");
            write_profile_csv(out, manifest["results"]);
        }
        if (!weiss.empty()) {
            auto out = open("diagnostics.csv");
            write_diagnostics_csv(out, weiss, density);
        }
        if (drift) {
            auto out = open("drift.csv");
            write_drift_csv(out, *drift);
        }
        return written;
    }

    json tables = json::object();
    if (has_results) {
        json t = json::array();
        for (const auto& r : manifest["results"])
            t.push_back({{"m", r.at("m")},
                         {"FK", r.at("lambda1")},
                         {"iterations", r.at("iterations")},
                         {"converged", r.at("converged")}});
        tables["fk_profile"] = t;
    }
    if (!weiss.empty()) {
        json t = json::array();
        for (std::size_t k = 0; k < weiss.size(); ++k)
            for (std::size_t i = 0; i < weiss[k].radii.size(); ++i)
                t.push_back({{"x0", {weiss[k].x0[0], weiss[k].x0[1]}},
                             {"r", weiss[k].radii[i]},
                             {"phi", weiss[k].phi[i]},
                             {"theta", density[k].theta[i]},
                             {"Lambda", weiss[k].Lambda}});
        tables["diagnostics"] = t;
    }
    if (drift) {
        json t = json::array();
        for (std::size_t k = 0; k < drift->positions.size(); ++k)
            t.push_back({{"t", drift->positions[k]},
                         {"r", drift->radii[k]},
                         {"lambda", drift->lambdas[k]},
                         {"gap", drift->gaps[k]}});
        tables["drift"] = t;
    }
    auto out = open("tables.json");
    out << tables.dump(2) << '\n';
    return written;
}

} // namespace fk
