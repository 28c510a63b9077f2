#include "fk/drift.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <thread>

#include "fk/grid.hpp"

namespace fk {

double bessel_j0_zero()
{
    double lo = 2.0, hi = 3.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::cyl_bessel_j(0.0, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

DriftResult run_catenoid_drift(double neck, double m, std::vector<double> positions,
                               std::array<int, 2> grid, double T, const DriftOptions& opts)
{
    if (positions.empty())
        throw std::invalid_argument("drift: no positions");
    if (!(m > 0.0))
        throw std::invalid_argument("drift: volume must be positive");
    const MetricChart chart = builtin_catenoid(neck, T);
    const Grid g(chart, grid[0], grid[1]);
    std::stable_sort(positions.begin(), positions.end(),
                     [](double a, double b) { return std::abs(a) < std::abs(b); });

    DriftResult d;
    d.neck = neck;
    d.m = m;
    d.T = T;
    d.grid = grid;
    d.positions = positions;
    d.polar = opts.polar;
    const double j = bessel_j0_zero();
    d.euclidean_floor = std::numbers::pi * j * j / m;

    const auto prof = catenoid_profile(neck);
    const std::size_t n = positions.size();
    d.radii.assign(n, 0.0);
    d.volumes.assign(n, 0.0);
    d.lambdas.assign(n, 0.0);
    d.cell_volumes.assign(n, 0.0);

    const int nt = std::clamp<int>(opts.threads, 1, static_cast<int>(n));
    auto parallel = [&](auto&& job) {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(n);
        auto work = [&] {
            for (std::size_t k; (k = next++) < n;) {
                try {
                    job(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < nt; ++t)
            pool.emplace_back(work);
        work();
        for (auto& t : pool)
            t.join();
        for (auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    };

    // radii first: the margin check must fail before any eigensolve
    parallel([&](std::size_t k) { d.radii[k] = polar_ball_radius(prof, positions[k], m, opts.polar); });
    d.min_margin_cells = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double t0 = positions[k];
        // meridians are unit speed, so the ball lies in |t - t0| <= r
        const double margin = (T - (std::abs(t0) + d.radii[k])) / g.h(1);
        if (margin < opts.margin_cells)
            throw TruncationError("drift: ball at t = " + std::to_string(t0) + " comes within " +
                                  std::to_string(margin) + " cells of |t| = " + std::to_string(T));
        d.min_margin_cells = std::min(d.min_margin_cells, margin);
        d.cell_volumes[k] = metric_at(chart, Point(0.0, t0)).sqrt_det * g.h(0) * g.h(1);
    }
    parallel([&](std::size_t k) {
        const auto b = polar_ball_eigenvalue(prof, positions[k], d.radii[k], opts.polar);
        d.lambdas[k] = b.lambda;
        d.volumes[k] = b.volume;
    });

    d.decreasing = true;
    d.positive = true;
    d.volumes_ok = true;
    for (std::size_t k = 0; k < n; ++k) {
        d.gaps.push_back(d.lambdas[k] - d.euclidean_floor);
        d.positive = d.positive && d.gaps[k] > 0.0;
        d.volumes_ok = d.volumes_ok && std::abs(d.volumes[k] - m) <= d.cell_volumes[k];
        if (k > 0 && !(d.lambdas[k] < d.lambdas[k - 1]))
            d.decreasing = false;
    }
    d.gap_ratio = d.gaps.back() / d.gaps.front();
    return d;
}

nlohmann::json to_json(const DriftResult& d)
{
    return {{"neck", d.neck},
            {"m", d.m},
            {"T", d.T},
            {"grid", d.grid},
            {"positions", d.positions},
            {"radii", d.radii},
            {"volumes", d.volumes},
            {"cell_volumes", d.cell_volumes},
            {"lambdas", d.lambdas},
            {"gaps", d.gaps},
            {"euclidean_floor", d.euclidean_floor},
            {"gap_ratio", d.gap_ratio},
            {"min_margin_cells", d.min_margin_cells},
            {"decreasing", d.decreasing},
            {"positive", d.positive},
            {"volumes_ok", d.volumes_ok},
            {"polar", {{"n_rho", d.polar.n_rho}, {"n_psi", d.polar.n_psi},
                       {"substeps", d.polar.substeps}, {"eig_tol", d.polar.eig_tol}}}};
}

DriftResult drift_from_json(const nlohmann::json& j)
{
    DriftResult d;
    d.neck = j.at("neck");
    d.m = j.at("m");
    d.T = j.at("T");
    d.grid = j.at("grid");
    d.positions = j.at("positions").get<std::vector<double>>();
    d.radii = j.at("radii").get<std::vector<double>>();
    d.volumes = j.at("volumes").get<std::vector<double>>();
    d.cell_volumes = j.at("cell_volumes").get<std::vector<double>>();
    d.lambdas = j.at("lambdas").get<std::vector<double>>();
    d.gaps = j.at("gaps").get<std::vector<double>>();
    d.euclidean_floor = j.at("euclidean_floor");
    d.gap_ratio = j.at("gap_ratio");
    d.min_margin_cells = j.at("min_margin_cells");
    d.decreasing = j.at("decreasing");
    d.positive = j.at("positive");
    d.volumes_ok = j.at("volumes_ok");
    const auto& p = j.at("polar");
    d.polar.n_rho = p.at("n_rho");
    d.polar.n_psi = p.at("n_psi");
    d.polar.substeps = p.at("substeps");
    d.polar.eig_tol = p.at("eig_tol");
    return d;
}

void write_drift_csv(std::ostream& os, const DriftResult& d)
{
    os << "t,r,lambda,gap\n" << std::setprecision(17);
    for (std::size_t k = 0; k < d.positions.size(); ++k)
        os << d.positions[k] << ',' << d.radii[k] << ',' << d.lambdas[k] << ',' << d.gaps[k]
           << '\n';
}

} // namespace fk
