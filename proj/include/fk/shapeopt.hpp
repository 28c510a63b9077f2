#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fk/eigensolve.hpp"

namespace fk {

enum class InitKind { ball, random_blob };

std::string to_string(InitKind k);
InitKind init_kind_from_string(const std::string& s);

struct ShapeOptions {
    double tol = 1e-4;     // shape loop
    double eig_tol = 1e-6; // inner eigensolves
    int max_iter = 200;
    double damping = 0.5; // weight of the old indicator in a damped step
    std::uint64_t seed = 1;
    InitKind init = InitKind::ball;
    std::optional<Point> center; // ball / blob centre, default: chart centre
    int band = 8;                // initial dilation band in rings
    bool polish = true;
    int polish_candidates = 24;
    int polish_max_evals = 4000;
    int truncation_margin = 5;
    InnerSolver inner = InnerSolver::ldlt;
};

struct TraceEntry {
    double lambda = 0.0;
    double volume = 0.0;
    double change = 0.0; // volume of the symmetric difference with the previous support
    bool accepted = false;
    std::string step; // init | threshold | damped | advect | swap
};

struct ShapeResult {
    double m = 0.0;
    Indicator support;
    double volume = 0.0;
    double lambda1 = 0.0;
    Field u;
    std::vector<TraceEntry> trace;
    double lambda_target = 0.0;
    std::optional<double> multiplier;
    bool converged = false;
    int iterations = 0;
    int eigensolves = 0;
};

/// int |grad w|^2 - lambda_target int w^2 with the discrete energy of w on {w != 0}.
double evaluate_J(const DiscreteOperatorPair& ops, const Field& w, double lambda_target);
double evaluate_J(const MetricChart& chart, const Grid& grid, const Field& w, double lambda_target);

/// Superlevel set of u holding volume m. Nodes are ranked by decreasing u
/// (ties by index) and the prefix whose volume is closest to m is kept.
Indicator volume_threshold(const Field& cell_vol, const Field& u, double m);
Indicator volume_threshold(const MetricChart& chart, const Grid& grid, const Field& u, double m);

/// Grow or shrink a support by `rings` layers of the 8-neighbourhood.
Indicator dilate(const Grid& grid, const Indicator& s, int rings);
Indicator erode(const Grid& grid, const Indicator& s, int rings);

/// Volume of the symmetric difference.
double symmetric_difference(const Field& cell_vol, const Indicator& a, const Indicator& b);

/// Minimise lambda_1 over supports of volume m.
///
/// Each step solves on a dilation of the current support, thresholds that
/// eigenfunction back to volume m and keeps the result only if lambda does
/// not increase. Rejected steps are retried with the score blended toward
/// the current indicator, then with a narrower band. A final local search
/// swaps boundary nodes while that lowers lambda.
ShapeResult fk_minimize(const MetricChart& chart, const Grid& grid,
                        const DiscreteOperatorPair& ops, double m, const ShapeOptions& opts = {});
ShapeResult fk_minimize(const MetricChart& chart, const Grid& grid, double m,
                        const ShapeOptions& opts = {});

/// Initial support of volume m per opts.init.
Indicator initial_support(const MetricChart& chart, const Grid& grid, double m,
                          const ShapeOptions& opts);

struct ProfileEntry {
    double m = 0.0;
    double fk = 0.0;
    ShapeResult result;
};

/// fk_minimize for every volume; independent solves run on up to `threads` workers.
std::vector<ProfileEntry> fk_profile(const MetricChart& chart, const Grid& grid,
                                     const std::vector<double>& volumes,
                                     const ShapeOptions& opts = {}, int threads = 1);

/// Centre of a support: extrinsic centroid through the embedding when the
/// chart has one, circular mean on periodic axes otherwise. Snapped to a node.
std::size_t support_barycenter(const MetricChart& chart, const Grid& grid, const Indicator& s);

/// Vol(S delta B) / m where B is the volume-m geodesic ball about the barycenter of S.
double ball_deviation(const MetricChart& chart, const Grid& grid, const Indicator& s, double m);

struct PenaltyViolation {
    int candidate = 0;
    std::string kind;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct PenalizationReport {
    double mu_star = 0.0;
    double fitted_mu = 0.0; // smallest mu making every candidate pass
    int candidates_tested = 0;
    double min_slack = 0.0; // over candidates, at mu_star
    std::vector<PenaltyViolation> violations;
};

/// Checks E(u) <= E(v) + lambda [1 - int v^2]^+ + mu [Vol{v != 0} - m]^+ over
/// seeded perturbations v of a converged minimiser: eigenfunctions of dilated,
/// eroded and translated supports and of nearby-volume balls, local bumps,
/// and rescalings. Without an explicit mu_star the fitted threshold is used.
PenalizationReport penalization_certificate(const MetricChart& chart, const Grid& grid,
                                            const DiscreteOperatorPair& ops,
                                            const ShapeResult& result,
                                            std::optional<double> mu_star, int n_candidates,
                                            std::uint64_t seed, double rel_tol = 1e-6);

} // namespace fk
