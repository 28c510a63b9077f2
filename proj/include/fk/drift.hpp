#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "fk/polar_ball.hpp"

namespace fk {

/// First positive zero of the Bessel function J0.
double bessel_j0_zero();

struct DriftOptions {
    PolarOptions polar;
    int threads = 1;
    int margin_cells = 5;
};

struct DriftResult {
    double neck = 0.0;
    double m = 0.0;
    double T = 0.0;
    std::array<int, 2> grid{0, 0};
    std::vector<double> positions; // sorted by |t|
    std::vector<double> radii;
    std::vector<double> volumes;
    std::vector<double> cell_volumes; // chart-grid cell at each centre
    std::vector<double> lambdas;
    std::vector<double> gaps; // lambda - euclidean_floor
    double euclidean_floor = 0.0;
    double gap_ratio = 0.0; // gap at the farthest centre over gap at the nearest
    double min_margin_cells = 0.0;
    bool decreasing = false;
    bool positive = false;
    bool volumes_ok = false;
    PolarOptions polar;
};

/// Geodesic balls of area m centred at heights t_j on the catenoid of the
/// given neck, truncated at |t| = T. The (theta, t) chart grid fixes the cell
/// size used for the truncation margin and the volume tolerance; the
/// eigenvalues come from polar_ball_eigenvalue. Throws TruncationError when a
/// ball comes within margin_cells rows of |t| = T.
DriftResult run_catenoid_drift(double neck, double m, std::vector<double> positions,
                               std::array<int, 2> grid, double T, const DriftOptions& opts = {});

nlohmann::json to_json(const DriftResult& d);
DriftResult drift_from_json(const nlohmann::json& j);

/// Columns t,r,lambda,gap.
void write_drift_csv(std::ostream& os, const DriftResult& d);

} // namespace fk
