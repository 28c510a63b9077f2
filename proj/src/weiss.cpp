#include <algorithm>
#include <cmath>
#include <numbers>

#include "fk/diagnostics.hpp"
#include "fk/geodesic.hpp"

namespace fk {

namespace {

// intercept of the least-squares line y = a + b r^2 through the first three samples
double extrapolate_r2(const std::vector<double>& r, const std::vector<double>& y)
{
    const std::size_t k = std::min<std::size_t>(3, r.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = r[i] * r[i];
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
    }
    const double den = k * sxx - sx * sx;
    if (k < 2 || den == 0.0)
        return y.front();
    const double b = (k * sxy - sx * sy) / den;
    return (sy - b * sx) / static_cast<double>(k);
}

struct EnergyAtom {
    double d; // distance from x0 of the point carrying the energy
    double e;
};

std::vector<EnergyAtom> energy_atoms(const DiscreteOperatorPair& ops, const Field& u,
                                     const Field& dist)
{
    std::vector<EnergyAtom> atoms;
    const double inf = std::numeric_limits<double>::infinity();
    auto quarter = [&](std::size_t in, std::size_t out) {
        const double di = dist[in];
        const double dq = dist[out];
        return std::isfinite(dq) ? di + 0.25 * (dq - di) : di;
    };
    for (Eigen::Index col = 0; col < ops.K.outerSize(); ++col) {
        const auto p = static_cast<std::size_t>(col);
        double rowsum = 0.0;
        for (SparseMatrix::InnerIterator it(ops.K, col); it; ++it) {
            rowsum += it.value();
            const auto q = static_cast<std::size_t>(it.row());
            if (q <= p)
                continue;
            const bool a = u[p] != 0.0;
            const bool b = u[q] != 0.0;
            if (!a && !b)
                continue;
            const double diff = u[p] - u[q];
            const double e = -it.value() * diff * diff;
            double d;
            if (a && b)
                d = (std::isfinite(dist[p]) && std::isfinite(dist[q])) ? 0.5 * (dist[p] + dist[q])
                                                                      : inf;
            else
                d = a ? quarter(p, q) : quarter(q, p);
            atoms.push_back({d, e});
        }
        // truncation faces
        if (u[p] != 0.0 && rowsum > 1e-12 * ops.K.coeff(col, col))
            atoms.push_back({dist[p], rowsum * u[p] * u[p]});
    }
    for (const auto& edge : ops.axis_edges) {
        const bool a = u[edge.p] != 0.0;
        const bool b = u[edge.q] != 0.0;
        if (a == b)
            continue;
        const std::size_t in = a ? edge.p : edge.q;
        const std::size_t out = a ? edge.q : edge.p;
        atoms.push_back({quarter(in, out), edge.c * u[in] * u[in]});
    }
    return atoms;
}

void check_inside(const Grid& grid, const Field& dist, double reach)
{
    for (std::size_t p = 0; p < grid.size(); ++p)
        if (dist[p] <= reach && grid.near_truncation(p, 1))
            throw TruncationError("profile ball of radius " + std::to_string(reach) +
                                  " exits the chart");
}

} // namespace

WeissProfile weiss_profile(const MetricChart& chart, const Grid& grid,
                           const DiscreteOperatorPair& ops, const Field& u, const Point& x0,
                           const std::vector<double>& radii, double Lambda)
{
    if (radii.empty())
        throw std::invalid_argument("weiss_profile: no radii");
    const double w = physical_spacing(chart, grid, x0);
    const double rmax = *std::max_element(radii.begin(), radii.end());
    const auto dist = geodesic_distance_field(chart, grid, x0, rmax + 3.0 * w).values;
    check_inside(grid, dist, rmax + 2.0 * w);
    const auto atoms = energy_atoms(ops, u, dist);
    const Field& vol = ops.M;

    auto evaluate = [&](double r, double width, double& energy, double& bulk, double& sphere) {
        energy = 0.0;
        for (const auto& a : atoms)
            if (std::isfinite(a.d))
                energy += ball_weight(a.d, r, width) * a.e;
        double positive = 0.0;
        sphere = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (!std::isfinite(dist[p]) || u[p] == 0.0)
                continue;
            if (u[p] > 0.0)
                positive += ball_weight(dist[p], r, width) * vol[p];
            sphere += shell_weight(dist[p], r, width) / width * vol[p] * u[p] * u[p];
        }
        energy /= r * r;
        bulk = energy + Lambda * positive / (r * r);
        sphere /= r * r * r;
    };

    WeissProfile wp;
    wp.x0 = x0;
    wp.radii = radii;
    wp.Lambda = Lambda;
    for (double r : radii) {
        double e, b, s, e2, b2, s2;
        evaluate(r, w, e, b, s);
        evaluate(r, 2.0 * w, e2, b2, s2);
        wp.energy.push_back(e);
        wp.bulk.push_back(b);
        wp.sphere.push_back(s);
        wp.phi.push_back(b - s);
        wp.error.push_back(std::abs((b - s) - (b2 - s2)));
    }
    // drops smaller than the quadrature error of the two samples are noise
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
        const double dr2 = radii[i + 1] * radii[i + 1] - radii[i] * radii[i];
        const double drop = wp.phi[i] - wp.phi[i + 1] - wp.error[i] - wp.error[i + 1];
        wp.C = std::max(wp.C, 2.0 * drop / dr2);
    }
    wp.monotone = std::isfinite(wp.C);
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
        const double a = wp.phi[i] + 0.5 * wp.C * radii[i] * radii[i];
        const double b = wp.phi[i + 1] + 0.5 * wp.C * radii[i + 1] * radii[i + 1];
        const double slack = wp.error[i] + wp.error[i + 1] + 1e-12 * std::max(1.0, std::abs(a));
        if (b < a - slack)
            wp.monotone = false;
    }
    wp.phi0 = extrapolate_r2(radii, wp.phi);
    wp.energy0 = extrapolate_r2(radii, wp.energy);
    return wp;
}

DensityReport density_profile(const MetricChart& chart, const Grid& grid, const Indicator& support,
                              const Point& x0, const std::vector<double>& radii, double delta)
{
    if (radii.empty())
        throw std::invalid_argument("density_profile: no radii");
    const double w = physical_spacing(chart, grid, x0);
    const double rmax = *std::max_element(radii.begin(), radii.end());
    const auto dist = geodesic_distance_field(chart, grid, x0, rmax + 2.0 * w).values;
    check_inside(grid, dist, rmax + w);
    const Field vol = cell_volumes(chart, grid);

    // k x k subsamples per cell; the indicator and the distance are bilinear
    // between nodes, so the support is the level-1/2 set of its interpolant
    constexpr int k = 4;
    struct Sub {
        double d;
        double v;
        bool in;
    };
    std::vector<Sub> subs;
    auto value = [&](const Field& f, std::size_t p, int sx, int sy, double t0, double t1) {
        auto pick = [&](int di, int dj) {
            auto q = grid.neighbor(p, di, dj);
            return q && std::isfinite(f[*q]) ? f[*q] : f[p];
        };
        const double a = f[p], b = pick(sx, 0), c = pick(0, sy), d = pick(sx, sy);
        return (1 - t0) * (1 - t1) * a + t0 * (1 - t1) * b + (1 - t0) * t1 * c + t0 * t1 * d;
    };
    const Field ind = indicator_field(support);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (!std::isfinite(dist[p]) || dist[p] > rmax + 2.0 * w)
            continue;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
                const double y0 = (a + 0.5) / k - 0.5;
                const double y1 = (b + 0.5) / k - 0.5;
                const int sx = y0 >= 0 ? 1 : -1;
                const int sy = y1 >= 0 ? 1 : -1;
                const double t0 = std::abs(y0);
                const double t1 = std::abs(y1);
                subs.push_back({value(dist, p, sx, sy, t0, t1), vol[p] / (k * k),
                                value(ind, p, sx, sy, t0, t1) >= 0.5});
            }
    }

    DensityReport rep;
    rep.x0 = x0;
    rep.radii = radii;
    rep.delta = delta;
    rep.all_within = true;
    for (double r : radii) {
        double in = 0.0, all = 0.0;
        for (const auto& sub : subs) {
            const double bw = ball_weight(sub.d, r, w) * sub.v;
            all += bw;
            if (sub.in)
                in += bw;
        }
        const double theta = in / all;
        rep.theta.push_back(theta);
        const bool ok = theta >= delta && theta <= 1.0 - delta;
        rep.within.push_back(ok);
        rep.all_within = rep.all_within && ok;
    }
    rep.theta0 = extrapolate_r2(radii, rep.theta);
    return rep;
}

double density_formula_check(const WeissProfile& profile, const DensityReport& report)
{
    return std::abs(report.theta0 - profile.phi0 / (profile.Lambda * std::numbers::pi));
}

double density_multiplier(const WeissProfile& profile, const DensityReport& report)
{
    return profile.energy0 / (std::numbers::pi * report.theta0);
}

} // namespace fk
