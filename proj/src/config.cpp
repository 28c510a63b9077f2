#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "fk/experiments.hpp"

namespace fk {

namespace {

using nlohmann::json;

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError(join(where, key), "unknown key");
}

double number(const json& j, const std::string& path)
{
    if (!j.is_number())
        throw ConfigError(path, "expected a number");
    return j.get<double>();
}

long long integer(const json& j, const std::string& path)
{
    if (!j.is_number_integer())
        throw ConfigError(path, "expected an integer");
    return j.get<long long>();
}

std::uint64_t seed_value(const json& j, const std::string& path)
{
    if (j.is_number_unsigned())
        return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0)
        return static_cast<std::uint64_t>(j.get<long long>());
    throw ConfigError(path, "expected a non-negative integer");
}

int positive_int(const json& j, const std::string& path)
{
    const long long v = integer(j, path);
    if (v <= 0 || v > 1 << 30)
        throw ConfigError(path, "expected a positive integer");
    return static_cast<int>(v);
}

bool boolean(const json& j, const std::string& path)
{
    if (!j.is_boolean())
        throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

std::string string(const json& j, const std::string& path)
{
    if (!j.is_string())
        throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty())
        throw ConfigError(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::array<int, 2> grid_pair(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(path, "expected [n0, n1]");
    return {positive_int(j[0], path + "[0]"), positive_int(j[1], path + "[1]")};
}

RunMode mode_from_string(const std::string& s, const std::string& path)
{
    if (s == "solve")
        return RunMode::solve;
    if (s == "profile")
        return RunMode::profile;
    if (s == "drift")
        return RunMode::drift;
    throw ConfigError(path, "unknown mode '" + s + "' (expected solve, profile or drift)");
}

void parse_solver(const json& j, ShapeOptions& o)
{
    check_keys(j,
               {"tol", "eig_tol", "max_iter", "damping", "seed", "init", "center", "band", "polish",
                "polish_candidates", "polish_max_evals", "truncation_margin", "inner"},
               "solver");
    for (const auto& [k, v] : j.items()) {
        const std::string p = "solver." + k;
        if (k == "tol")
            o.tol = number(v, p);
        else if (k == "eig_tol")
            o.eig_tol = number(v, p);
        else if (k == "max_iter")
            o.max_iter = positive_int(v, p);
        else if (k == "damping")
            o.damping = number(v, p);
        else if (k == "seed")
            o.seed = seed_value(v, p);
        else if (k == "init") {
            try {
                o.init = init_kind_from_string(string(v, p));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(p, e.what());
            }
        } else if (k == "center") {
            const auto c = numbers(v, p);
            if (c.size() != 2)
                throw ConfigError(p, "expected [x1, x2]");
            o.center = Point(c[0], c[1]);
        } else if (k == "band")
            o.band = positive_int(v, p);
        else if (k == "polish")
            o.polish = boolean(v, p);
        else if (k == "polish_candidates")
            o.polish_candidates = positive_int(v, p);
        else if (k == "polish_max_evals")
            o.polish_max_evals = positive_int(v, p);
        else if (k == "truncation_margin")
            o.truncation_margin = positive_int(v, p);
        else if (k == "inner") {
            const auto s = string(v, p);
            if (s == "ldlt")
                o.inner = InnerSolver::ldlt;
            else if (s == "cg")
                o.inner = InnerSolver::cg;
            else
                throw ConfigError(p, "expected ldlt or cg");
        }
    }
    if (!(o.tol > 0.0))
        throw ConfigError("solver.tol", "must be positive");
    if (!(o.eig_tol > 0.0))
        throw ConfigError("solver.eig_tol", "must be positive");
    if (!(o.damping >= 0.0 && o.damping < 1.0))
        throw ConfigError("solver.damping", "must lie in [0, 1)");
}

void parse_diagnostics(const json& j, DiagnosticsConfig& d)
{
    check_keys(j,
               {"enabled", "points", "radii", "r_max", "band_cells", "penalization_candidates",
                "penalization_seed"},
               "diagnostics");
    for (const auto& [k, v] : j.items()) {
        const std::string p = "diagnostics." + k;
        if (k == "enabled")
            d.enabled = boolean(v, p);
        else if (k == "points")
            d.points = positive_int(v, p);
        else if (k == "radii")
            d.radii = positive_int(v, p);
        else if (k == "r_max")
            d.r_max = number(v, p);
        else if (k == "band_cells")
            d.band_cells = number(v, p);
        else if (k == "penalization_candidates") {
            const long long n = integer(v, p);
            if (n < 0)
                throw ConfigError(p, "must be non-negative");
            d.penalization_candidates = static_cast<int>(n);
        } else if (k == "penalization_seed") {
            d.penalization_seed = seed_value(v, p);
        }
    }
    if (d.radii < 2)
        throw ConfigError("diagnostics.radii", "need at least 2 radii");
    if (d.band_cells < 2.0 || d.band_cells > 5.0)
        throw ConfigError("diagnostics.band_cells", "must lie in [2, 5]");
}

void parse_drift(const json& j, DriftConfig& d)
{
    check_keys(j, {"neck", "volume", "positions", "grid", "truncation", "n_rho", "n_psi"}, "drift");
    for (const auto& [k, v] : j.items()) {
        const std::string p = "drift." + k;
        if (k == "neck")
            d.neck = number(v, p);
        else if (k == "volume")
            d.volume = number(v, p);
        else if (k == "positions")
            d.positions = numbers(v, p);
        else if (k == "grid")
            d.grid = grid_pair(v, p);
        else if (k == "truncation")
            d.truncation = number(v, p);
        else if (k == "n_rho")
            d.n_rho = positive_int(v, p);
        else if (k == "n_psi")
            d.n_psi = positive_int(v, p);
    }
    if (!(d.neck > 0.0))
        throw ConfigError("drift.neck", "must be positive");
    if (!(d.volume > 0.0))
        throw ConfigError("drift.volume", "must be positive");
    if (!(d.truncation > 0.0))
        throw ConfigError("drift.truncation", "must be positive");
}

} // namespace

std::string to_string(RunMode m)
{
    switch (m) {
    case RunMode::solve:
        return "solve";
    case RunMode::profile:
        return "profile";
    case RunMode::drift:
        return "drift";
    }
    return "?";
}

RunConfig parse_config(const json& j)
{
    check_keys(j,
               {"schema_version", "mode", "chart", "grid", "m", "volumes", "solver", "diagnostics",
                "drift", "output", "write_fields"},
               "");
    RunConfig c;
    if (!j.contains("schema_version"))
        throw ConfigError("schema_version", "missing");
    if (integer(j["schema_version"], "schema_version") != kSchemaVersion)
        throw ConfigError("schema_version",
                          "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    if (!j.contains("mode"))
        throw ConfigError("mode", "missing");
    c.mode = mode_from_string(string(j["mode"], "mode"), "mode");

    if (j.contains("output"))
        c.output = string(j["output"], "output");
    if (j.contains("write_fields"))
        c.write_fields = boolean(j["write_fields"], "write_fields");
    if (j.contains("solver"))
        parse_solver(j["solver"], c.solver);
    if (j.contains("diagnostics"))
        parse_diagnostics(j["diagnostics"], c.diagnostics);
    if (j.contains("drift"))
        parse_drift(j["drift"], c.drift);

    if (c.mode == RunMode::drift) {
        for (const char* k : {"chart", "grid", "m", "volumes"})
            if (j.contains(k))
                throw ConfigError(k, "not used in drift mode (see drift.*)");
        return c;
    }
    if (j.contains("drift"))
        throw ConfigError("drift", "only used in drift mode");
    if (!j.contains("chart"))
        throw ConfigError("chart", "missing");
    c.chart = j["chart"];
    try {
        (void)chart_from_json(c.chart);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    if (j.contains("grid"))
        c.grid = grid_pair(j["grid"], "grid");
    if (c.mode == RunMode::solve) {
        if (!j.contains("m"))
            throw ConfigError("m", "missing");
        if (j.contains("volumes"))
            throw ConfigError("volumes", "only used in profile mode");
        c.m = number(j["m"], "m");
        if (!(c.m > 0.0))
            throw ConfigError("m", "must be positive");
    } else {
        if (!j.contains("volumes"))
            throw ConfigError("volumes", "missing");
        if (j.contains("m"))
            throw ConfigError("m", "only used in solve mode");
        c.volumes = numbers(j["volumes"], "volumes");
        for (std::size_t i = 0; i < c.volumes.size(); ++i)
            if (!(c.volumes[i] > 0.0))
                throw ConfigError("volumes[" + std::to_string(i) + "]", "must be positive");
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", path.string() + ": malformed JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const RunConfig& c)
{
    const auto& s = c.solver;
    json solver = {{"tol", s.tol},
                   {"eig_tol", s.eig_tol},
                   {"max_iter", s.max_iter},
                   {"damping", s.damping},
                   {"seed", s.seed},
                   {"init", to_string(s.init)},
                   {"band", s.band},
                   {"polish", s.polish},
                   {"polish_candidates", s.polish_candidates},
                   {"polish_max_evals", s.polish_max_evals},
                   {"truncation_margin", s.truncation_margin},
                   {"inner", s.inner == InnerSolver::ldlt ? "ldlt" : "cg"}};
    if (s.center)
        solver["center"] = {(*s.center)[0], (*s.center)[1]};
    const auto& d = c.diagnostics;
    json out = {{"schema_version", c.schema_version},
                {"mode", to_string(c.mode)},
                {"write_fields", c.write_fields},
                {"solver", solver},
                {"diagnostics",
                 {{"enabled", d.enabled},
                  {"points", d.points},
                  {"radii", d.radii},
                  {"r_max", d.r_max},
                  {"band_cells", d.band_cells},
                  {"penalization_candidates", d.penalization_candidates},
                  {"penalization_seed", d.penalization_seed}}}};
    if (c.mode == RunMode::drift) {
        const auto& r = c.drift;
        out["drift"] = {{"neck", r.neck},           {"volume", r.volume}, {"positions", r.positions},
                        {"grid", r.grid},           {"truncation", r.truncation},
                        {"n_rho", r.n_rho},         {"n_psi", r.n_psi}};
        return out;
    }
    out["chart"] = c.chart;
    out["grid"] = c.grid;
    if (c.mode == RunMode::solve)
        out["m"] = c.m;
    else
        out["volumes"] = c.volumes;
    return out;
}

int thread_count_from_env()
{
    if (const char* s = std::getenv("FK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v > 0)
            return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace fk
