#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fk/experiments.hpp"
#include "oracles/radial_shooting.hpp"

using namespace fk;
using doctest::Approx;
namespace fs = std::filesystem;

constexpr double pi = std::numbers::pi;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("fk_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int lines(const fs::path& p)
{
    const auto s = slurp(p);
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

nlohmann::json torus_config(const fs::path& out)
{
    return {{"schema_version", 1},
            {"mode", "solve"},
            {"chart", {{"name", "flat_torus"}, {"params", {{"L1", 2 * pi}, {"L2", 2 * pi}}}}},
            {"grid", {96, 96}},
            {"m", 0.5},
            {"output", out.string()}};
}

std::string config_error_key(const nlohmann::json& j)
{
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

} // namespace

TEST_CASE("Bessel zero agrees with the shooting oracle")
{
    CHECK(bessel_j0_zero() == Approx(oracle::bessel_j0_zero()).epsilon(1e-12));
}

TEST_CASE("polar ball on a flat cylinder reproduces the disk")
{
    PolarOptions o;
    o.n_rho = 128;
    o.n_psi = 32;
    const auto cyl = cylinder_profile();
    const double r = polar_ball_radius(cyl, 0.0, 1.0, o);
    CHECK(r == Approx(std::sqrt(1.0 / pi)).epsilon(1e-12));
    CHECK(polar_ball_volume(cyl, 0.0, r, o) == Approx(1.0).epsilon(1e-12));
    const auto b = polar_ball_eigenvalue(cyl, 0.0, r, o);
    const double exact = oracle::disk_lambda(1.0);
    // conforming elements approach from above at second order
    CHECK(b.lambda > exact);
    CHECK(b.lambda - exact <= 2e-4 * exact);
    o.n_rho = 256;
    const auto fine = polar_ball_eigenvalue(cyl, 0.0, r, o);
    CHECK(fine.lambda > exact);
    CHECK((b.lambda - exact) / (fine.lambda - exact) == Approx(4.0).epsilon(0.1));
}

TEST_CASE("polar ball far up the catenoid")
{
    PolarOptions o;
    o.n_rho = 64;
    o.n_psi = 32;
    const auto cat = catenoid_profile(1.0);
    const double r = polar_ball_radius(cat, 48.0, 1.0, o);
    CHECK(std::abs(r - std::sqrt(1.0 / pi)) <= 0.01 * std::sqrt(1.0 / pi));
    // negative curvature: area grows faster than pi r^2
    CHECK(r < std::sqrt(1.0 / pi));
    CHECK(polar_ball_radius(cat, 3.0, 1.0, o) < r);
    CHECK_THROWS_AS(polar_ball_volume(cat, 0.0, -1.0, o), std::invalid_argument);
}

TEST_CASE("catenoid drift")
{
    DriftOptions o;
    o.polar.n_rho = 96;
    o.polar.n_psi = 32;
    const auto d = run_catenoid_drift(1.0, 1.0, {12.0, 3.0, 6.0}, {256, 128}, 30.0, o);
    CHECK(d.positions == std::vector<double>{3.0, 6.0, 12.0});
    CHECK(d.euclidean_floor == Approx(oracle::disk_lambda(1.0)).epsilon(1e-12));
    CHECK(d.decreasing);
    CHECK(d.positive);
    CHECK(d.volumes_ok);
    CHECK(d.gap_ratio < 0.2);
    CHECK(d.min_margin_cells >= 5.0);

    std::ostringstream os;
    write_drift_csv(os, d);
    CHECK(os.str().rfind("t,r,lambda,gap\n", 0) == 0);
    const auto back = drift_from_json(to_json(d));
    CHECK(back.lambdas == d.lambdas);

    CHECK_THROWS_AS(run_catenoid_drift(1.0, 1.0, {29.0}, {256, 128}, 30.0, o), TruncationError);
    CHECK_THROWS_AS(run_catenoid_drift(1.0, 1.0, {}, {256, 128}, 30.0, o), std::invalid_argument);
}

TEST_CASE("config parsing")
{
    const auto ok = torus_config("x");
    const auto c = parse_config(ok);
    CHECK(c.mode == RunMode::solve);
    CHECK(c.m == 0.5);
    CHECK(c.grid == std::array<int, 2>{96, 96});
    CHECK(c.solver.tol == 1e-4);
    CHECK(c.solver.eig_tol == 1e-6);

    // round trip through the echoed form
    auto echoed = to_json(c);
    CHECK_FALSE(echoed.contains("output"));
    CHECK(to_json(parse_config(echoed)) == echoed);

    auto j = ok;
    j["solver"] = {{"tolerance", 1e-3}};
    CHECK(config_error_key(j) == "solver.tolerance");
    j = ok;
    j["diagnostics"] = {{"points", "many"}};
    CHECK(config_error_key(j) == "diagnostics.points");
    j = ok;
    j["colour"] = 1;
    CHECK(config_error_key(j) == "colour");
    j = ok;
    j.erase("schema_version");
    CHECK(config_error_key(j) == "schema_version");
    j = ok;
    j["schema_version"] = 99;
    CHECK(config_error_key(j) == "schema_version");
    j = ok;
    j["grid"] = {10};
    CHECK(config_error_key(j) == "grid");
    j = ok;
    j["volumes"] = {0.1};
    CHECK(config_error_key(j) == "volumes");
    j = ok;
    j["mode"] = "profile";
    j.erase("m");
    j["volumes"] = {0.1, -0.2};
    CHECK(config_error_key(j) == "volumes[1]");
    j = ok;
    j["solver"] = {{"init", "square"}};
    CHECK(config_error_key(j) == "solver.init");
    j = ok;
    j["chart"]["params"]["L3"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    const auto bad = scratch("bad.json");
    std::ofstream(bad) << "{\"schema_version\": 1,";
    CHECK_THROWS_AS(load_config(bad), ConfigError);
}

TEST_CASE("thread count from the environment")
{
    setenv("FK_THREADS", "3", 1);
    CHECK(thread_count_from_env() == 3);
    setenv("FK_THREADS", "zero", 1);
    CHECK(thread_count_from_env() >= 1);
    unsetenv("FK_THREADS");
}

TEST_CASE("solve run writes manifest, fields and tables")
{
    const auto dir = scratch("solve");
    auto j = torus_config(dir);
    j["diagnostics"] = {{"enabled", true}, {"points", 12}, {"radii", 6}};
    const auto out = run_config(parse_config(j), 1);
    CHECK(out.exit_code == 0);
    CHECK(out.failures.empty());
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "run_info.json"));
    CHECK(fs::exists(dir / "fields" / "u_0.csv"));
    CHECK(lines(dir / "fields" / "support_0.csv") == 96 * 96 + 1);
    CHECK(lines(dir / "fk_profile.csv") == 2);
    CHECK(lines(dir / "diagnostics.csv") == 12 * 6 + 1);
    const auto m = out.manifest;
    CHECK(m["results"][0]["lambda1"].get<double>() ==
          Approx(oracle::disk_lambda(0.5)).epsilon(0.03));
    CHECK(m["checks"]["result[0].saturation"] == true);
    CHECK_FALSE(m.contains("timestamp"));

    const auto files = export_results(dir, "json");
    REQUIRE(files.size() == 1);
    const auto tables = nlohmann::json::parse(slurp(files[0]));
    CHECK(tables["fk_profile"].size() == 1);
    CHECK(tables["diagnostics"].size() == 12 * 6);
    CHECK_THROWS_AS(export_results(dir, "xml"), std::invalid_argument);
}

TEST_CASE("profile run")
{
    const auto dir = scratch("profile");
    auto j = torus_config(dir);
    j["mode"] = "profile";
    j.erase("m");
    j["volumes"] = {0.3, 0.6};
    j["write_fields"] = false;
    const auto out = run_config(parse_config(j), 2);
    CHECK(out.exit_code == 0);
    CHECK(lines(dir / "fk_profile.csv") == 3);
    CHECK_FALSE(fs::exists(dir / "fields"));
    CHECK(out.manifest["checks"]["profile.nonincreasing"] == true);
}

TEST_CASE("failed invariants give a nonzero exit code")
{
    const auto dir = scratch("nonconverged");
    auto j = torus_config(dir);
    j["solver"] = {{"max_iter", 1}, {"polish", false}};
    j["write_fields"] = false;
    const auto c = parse_config(j);
    const auto out = run_config(c, 1);
    if (!out.manifest["results"][0]["converged"].get<bool>()) {
        CHECK(out.exit_code != 0);
        CHECK(run_config(c, 1, true).manifest["checks"].count("result[0].converged") == 0);
    }
}

TEST_CASE("repeated runs give byte-identical manifests")
{
    const auto dir = scratch("repeat");
    auto j = torus_config(dir);
    j["solver"] = {{"init", "random_blob"}, {"seed", 11}};
    j["diagnostics"] = {{"enabled", true}, {"points", 8}, {"radii", 4},
                        {"penalization_candidates", 10}};
    const auto c = parse_config(j);
    run_config(c, 2);
    const auto first = slurp(dir / "manifest.json");
    run_config(c, 2);
    CHECK(slurp(dir / "manifest.json") == first);
}

TEST_CASE("drift run and export")
{
    const auto dir = scratch("drift");
    RunConfig c;
    c.mode = RunMode::drift;
    c.output = dir.string();
    c.drift.positions = {3.0, 6.0};
    c.drift.grid = {256, 128};
    c.drift.truncation = 20.0;
    c.drift.n_rho = 64;
    c.drift.n_psi = 16;
    const auto out = run_config(c, 2);
    CHECK(out.exit_code == 0);
    CHECK(lines(dir / "drift.csv") == 3);
    CHECK_FALSE(fs::exists(dir / "fk_profile.csv"));
}

TEST_CASE("export from an empty directory")
{
    const auto dir = scratch("empty");
    fs::create_directories(dir);
    try {
        export_results(dir, "csv");
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("no manifest found") != std::string::npos);
    }
}
