#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fk/diagnostics.hpp"
#include "fk/drift.hpp"

namespace fk {

inline constexpr int kSchemaVersion = 1;

/// Bad configuration. key() is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key))
    {
    }
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct DiagnosticsConfig {
    bool enabled = false;
    int points = 24;         // boundary points for the Weiss and density profiles
    int radii = 10;          // radii per point, geometric from 3 cells to r0
    double r_max = 0.0;      // cap on r0 when positive
    double band_cells = 3.0; // multiplier band width in cells
    int penalization_candidates = 0;
    std::uint64_t penalization_seed = 7;
};

struct DriftConfig {
    double neck = 1.0;
    double volume = 1.0;
    std::vector<double> positions{3.0, 6.0, 12.0, 24.0, 48.0};
    std::array<int, 2> grid{1024, 512};
    double truncation = 60.0;
    int n_rho = 256;
    int n_psi = 64;
};

enum class RunMode { solve, profile, drift };

struct RunConfig {
    int schema_version = kSchemaVersion;
    RunMode mode = RunMode::solve;
    nlohmann::json chart; // chart_from_json input
    std::array<int, 2> grid{256, 256};
    double m = 0.0;
    std::vector<double> volumes;
    ShapeOptions solver;
    DiagnosticsConfig diagnostics;
    DriftConfig drift;
    std::string output = "run";
    bool write_fields = true;
};

std::string to_string(RunMode m);

/// Strict parse: unknown keys, wrong types and missing required entries throw
/// ConfigError naming the key path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Complete config with defaults filled in. The output directory is omitted.
nlohmann::json to_json(const RunConfig& c);

/// FK_THREADS when set and positive, else hardware concurrency.
int thread_count_from_env();

struct RunOutcome {
    int exit_code = 0; // 0 when every enabled check passed
    std::filesystem::path dir;
    nlohmann::json manifest;
    std::vector<std::string> failures;
};

/// Runs the experiment and writes into c.output: manifest.json (sorted keys,
/// no wall-clock data), run_info.json (timestamp, timings), the report CSVs
/// and, for solves, fields/u_<k>.csv and fields/support_<k>.csv.
RunOutcome run_config(const RunConfig& c, int threads, bool allow_nonconverged = false);
RunOutcome run_config(const std::filesystem::path& path, int threads,
                      bool allow_nonconverged = false);

/// Flat tables from a finished run: fk_profile.csv (m,FK,iterations,converged),
/// drift.csv (t,r,lambda,gap), diagnostics.csv (x0,r,phi,theta,Lambda), or the
/// same tables in tables.json. Returns the files written.
std::vector<std::filesystem::path> export_results(const std::filesystem::path& run_dir,
                                                  const std::string& format);

} // namespace fk
