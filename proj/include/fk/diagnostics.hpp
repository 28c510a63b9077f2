#pragma once

#include <iosfwd>
#include <vector>

#include "fk/shapeopt.hpp"

namespace fk {

/// Support nodes with a 4-neighbour outside the support.
std::vector<std::size_t> boundary_nodes(const Grid& grid, const Indicator& support);

/// Points on the discrete free boundary: from `count` boundary nodes taken at
/// an even stride (all of them when count <= 0), one Newton step to the zero
/// of the linearised u, then a bisection along the normal to the point where
/// the support covers half of the 3-cell ball. Falls back to the outer face
/// midpoint when the Newton step is longer than 1.5 cells.
std::vector<Point> boundary_points(const MetricChart& chart, const Grid& grid,
                                   const Indicator& support, const Field& u, int count);

struct MultiplierEstimate {
    double Lambda = 0.0;
    double band_width = 0.0;
    std::vector<std::size_t> nodes;
    std::vector<double> samples; // |grad u|^2 at each boundary node
    double dispersion = 0.0;     // coefficient of variation of samples
};

/// Band mean of |grad u|^2 over the boundary nodes. Derivatives toward an
/// outside neighbour are one-sided: u = s d + c d^2 with u = 0 on the face is
/// fitted to the interior samples along that axis line within band_width.
MultiplierEstimate lagrange_multiplier_estimate(const MetricChart& chart, const Grid& grid,
                                                const ShapeResult& result, double band_width);

struct WeissProfile {
    Point x0;
    std::vector<double> radii;
    std::vector<double> phi;
    std::vector<double> bulk;      // r^-2 int_B (|grad u|^2 + Lambda 1{u>0})
    std::vector<double> energy;    // r^-2 int_B |grad u|^2
    std::vector<double> sphere;    // r^-3 int_dB u^2
    std::vector<double> error;     // |phi(w) - phi(2w)| for annulus width w
    double C = 0.0; // smallest C >= 0 with phi + C r^2 / 2 nondecreasing up to error
    double phi0 = 0.0;
    double energy0 = 0.0;
    double Lambda = 0.0;
    bool monotone = false; // phi + C r^2 / 2 nondecreasing within the sample errors
};

/// phi(r) = r^-2 int_{B_r} (|grad u|^2 + Lambda 1{u>0}) - r^-3 int_{dB_r} u^2.
///
/// Balls are smoothed indicators of the geodesic distance from x0 with a
/// transition of one cell; the sphere term uses the matching tent-weighted
/// annulus. Edge energies of K are located at edge midpoints; an edge to a
/// node outside the support carries the reflected-ghost energy 2c u^2 a
/// quarter of the way out.
WeissProfile weiss_profile(const MetricChart& chart, const Grid& grid,
                           const DiscreteOperatorPair& ops, const Field& u, const Point& x0,
                           const std::vector<double>& radii, double Lambda);

struct DensityReport {
    Point x0;
    std::vector<double> radii;
    std::vector<double> theta;
    std::vector<bool> within; // theta in [delta, 1 - delta]
    double delta = 0.1;
    double theta0 = 0.0;
    bool all_within = false;
};

DensityReport density_profile(const MetricChart& chart, const Grid& grid, const Indicator& support,
                              const Point& x0, const std::vector<double>& radii,
                              double delta = 0.1);

/// |theta0 - phi0 / (Lambda pi)|
double density_formula_check(const WeissProfile& profile, const DensityReport& report);

/// Lambda implied by the small-ball energy density: energy0 / (pi theta0).
double density_multiplier(const WeissProfile& profile, const DensityReport& report);

/// Geometric radii from 3 cells to r0 = min(injectivity / 4, distance to a
/// truncation edge), capped at r_max when positive.
std::vector<double> profile_radii(const MetricChart& chart, const Grid& grid, const Point& x0,
                                  int count, double r_max = 0.0);

struct NondegeneracyReport {
    std::vector<Point> points;
    std::vector<double> c_point; // min over radii of sphere_average / r
    double c_emp = 0.0;
};

NondegeneracyReport nondegeneracy_check(const MetricChart& chart, const Grid& grid,
                                        const ShapeResult& result,
                                        const std::vector<Point>& points,
                                        const std::vector<double>& radii);

struct GrowthReport {
    double C_emp = 0.0;
    int samples = 0; // (x0, r) pairs whose ball leaves the support
};

/// Largest sphere_average / r over tested balls not contained in the support.
GrowthReport growth_bound_check(const MetricChart& chart, const Grid& grid,
                                const ShapeResult& result, const std::vector<Point>& points,
                                const std::vector<double>& radii);

/// Metric length of the marching-squares level-1/2 curve of the indicator.
double perimeter_estimate(const MetricChart& chart, const Grid& grid, const Indicator& support);

nlohmann::json to_json(const MultiplierEstimate& m);
nlohmann::json to_json(const WeissProfile& w);
nlohmann::json to_json(const DensityReport& d);

/// One row per (x0, r): x0,r,phi,theta,Lambda. x0 is written as "x1;x2".
void write_diagnostics_csv(std::ostream& os, const std::vector<WeissProfile>& weiss,
                           const std::vector<DensityReport>& density);

} // namespace fk
