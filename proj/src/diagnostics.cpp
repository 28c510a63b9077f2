#include "fk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "fk/geodesic.hpp"

namespace fk {

namespace {

constexpr int kAxisNb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

bool outside(const Grid& grid, const Indicator& s, std::size_t p, int di, int dj)
{
    auto q = grid.neighbor(p, di, dj);
    if (!q) {
        const int a = di != 0 ? 0 : 1;
        return grid.kind(a) == AxisKind::dirichlet;
    }
    return !s[*q];
}

// Covariant gradient of u at boundary node p. Axes with an outside
// neighbour use u = s d + c d^2, u = 0 on the face, fitted to the interior
// samples along the axis line within band_width.
Point boundary_gradient(const MetricChart& chart, const Grid& grid, const Indicator& S,
                        const Field& u, std::size_t p, double band_width)
{
    const Mat2 G = chart.g(grid.node(p));
    Point du = Point::Zero();
    for (int a = 0; a < 2; ++a) {
        const int di = a == 0 ? 1 : 0;
        const int dj = a == 1 ? 1 : 0;
        const bool out_f = outside(grid, S, p, di, dj);
        const bool out_b = outside(grid, S, p, -di, -dj);
        const double ha = grid.h(a);
        if (!out_f && !out_b) {
            auto f = grid.neighbor(p, di, dj);
            auto b = grid.neighbor(p, -di, -dj);
            if (f && b)
                du[a] = (u[*f] - u[*b]) / (2.0 * ha);
            continue;
        }
        if (out_f && out_b) {
            du[a] = u[p] / (0.5 * ha);
            continue;
        }
        // walk inward from the face, u = s d + c d^2 with u(0) = 0
        const int sgn = out_f ? -1 : 1;
        const double scale = std::sqrt(G(a, a));
        double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
        int samples = 0;
        std::optional<std::size_t> q = p;
        for (int k = 0; q && S[*q]; ++k) {
            const double d = (k + 0.5) * ha;
            if (k > 0 && d * scale > band_width)
                break;
            s11 += d * d;
            s12 += d * d * d;
            s22 += d * d * d * d;
            r1 += d * u[*q];
            r2 += d * d * u[*q];
            ++samples;
            q = grid.neighbor(*q, sgn * di, sgn * dj);
        }
        const double slope = samples >= 2 ? (r1 * s22 - r2 * s12) / (s11 * s22 - s12 * s12)
                                          : u[p] / (0.5 * ha);
        du[a] = sgn * slope;
    }
    return du;
}

} // namespace

std::vector<std::size_t> boundary_nodes(const Grid& grid, const Indicator& support)
{
    std::size_t count = 0;
    for (auto b : support)
        count += b ? 1 : 0;
    if (count == 0 || count == support.size())
        throw std::invalid_argument("boundary_nodes: support is empty or full");
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (!support[p])
            continue;
        for (const auto& d : kAxisNb) {
            auto q = grid.neighbor(p, d[0], d[1]);
            if (q && !support[*q]) {
                out.push_back(p);
                break;
            }
        }
    }
    return out;
}

std::vector<Point> boundary_points(const MetricChart& chart, const Grid& grid,
                                   const Indicator& support, const Field& u, int count)
{
    const auto nodes = boundary_nodes(grid, support);
    const std::size_t n = nodes.size();
    const std::size_t k = count <= 0 ? n : std::min<std::size_t>(n, count);
    std::vector<Point> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t p = nodes[i * n / k];
        const Point xp = grid.node(p);
        Point face = xp;
        for (const auto& d : kAxisNb)
            if (outside(grid, support, p, d[0], d[1])) {
                face += Point(0.5 * d[0] * grid.h(0), 0.5 * d[1] * grid.h(1));
                break;
            }
        const double h = physical_spacing(chart, grid, xp);
        const Point du = boundary_gradient(chart, grid, support, u, p, 3.0 * h);
        const Mat2 G = chart.g(xp);
        const Point v = MetricTensor::from(G).g_inv * du;
        const double norm2 = du.dot(v);
        Point x0 = face;
        if (norm2 > 0.0) {
            // Newton step to the zero of the linearised u
            const Point step = -u[p] * v / norm2;
            if (step.dot(G * step) <= 2.25 * h * h)
                x0 = xp + step;
            // then along the normal to where the 3-cell ball is half covered
            const Point nrm = v / std::sqrt(norm2);
            auto excess = [&](double t) {
                const Point x = chart.wrap(x0 + t * nrm);
                return density_profile(chart, grid, support, x, {3.0 * h}).theta[0] - 0.5;
            };
            double lo = -1.5 * h, hi = 1.5 * h;
            double flo = excess(lo), fhi = excess(hi);
            if (flo <= 0.0 && fhi >= 0.0) {
                for (int it = 0; it < 20; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double f = excess(mid);
                    if (f < 0.0) {
                        lo = mid;
                        flo = f;
                    } else {
                        hi = mid;
                        fhi = f;
                    }
                }
                const double t = fhi > flo ? lo - flo * (hi - lo) / (fhi - flo) : lo;
                x0 = x0 + t * nrm;
            }
        }
        out.push_back(chart.wrap(x0));
    }
    return out;
}

MultiplierEstimate lagrange_multiplier_estimate(const MetricChart& chart, const Grid& grid,
                                                const ShapeResult& result, double band_width)
{
    const auto& S = result.support;
    const Field& u = result.u;
    const auto nodes = boundary_nodes(grid, S);
    const double h = physical_spacing(chart, grid, grid.node(support_barycenter(chart, grid, S)));
    if (band_width < 2.0 * h * (1.0 - 1e-9) || band_width > 5.0 * h * (1.0 + 1e-9))
        throw std::invalid_argument("band width must lie between 2 and 5 cells");

    MultiplierEstimate est;
    est.band_width = band_width;
    std::vector<double> raw;
    for (std::size_t p : nodes) {
        const Point du = boundary_gradient(chart, grid, S, u, p, band_width);
        raw.push_back(du.dot(MetricTensor::from(chart.g(grid.node(p))).g_inv * du));
    }
    // band sample: mean over the boundary nodes within band_width
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Point xk = grid.node(nodes[k]);
        const Mat2 G = chart.g(xk);
        double acc = 0.0;
        int cnt = 0;
        for (std::size_t l = 0; l < nodes.size(); ++l) {
            const Point d = chart.displacement(xk, grid.node(nodes[l]));
            if (d.dot(G * d) <= band_width * band_width) {
                acc += raw[l];
                ++cnt;
            }
        }
        est.nodes.push_back(nodes[k]);
        est.samples.push_back(acc / cnt);
    }
    if (est.samples.empty())
        throw std::runtime_error("empty boundary band");
    double mean = 0.0;
    for (double v : est.samples)
        mean += v;
    mean /= static_cast<double>(est.samples.size());
    double var = 0.0;
    for (double v : est.samples)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(est.samples.size());
    est.Lambda = mean;
    est.dispersion = std::sqrt(var) / mean;
    return est;
}

std::vector<double> profile_radii(const MetricChart& chart, const Grid& grid, const Point& x0,
                                  int count, double r_max)
{
    const double h = physical_spacing(chart, grid, x0);
    double r0 = 0.25 * chart.injectivity_scale();
    for (int a = 0; a < 2; ++a) {
        if (chart.kind(a) != AxisKind::dirichlet)
            continue;
        const double gap = std::min(x0[a] - chart.lo(a), chart.hi(a) - x0[a]);
        r0 = std::min(r0, gap * std::sqrt(chart.g(x0)(a, a)));
    }
    if (r_max > 0.0)
        r0 = std::min(r0, r_max);
    const double r_lo = 3.0 * h;
    if (!(r0 > r_lo))
        throw std::invalid_argument("profile radii: r0 is below three cells");
    std::vector<double> radii(static_cast<std::size_t>(std::max(count, 2)));
    const double q = std::pow(r0 / r_lo, 1.0 / (radii.size() - 1));
    for (std::size_t i = 0; i < radii.size(); ++i)
        radii[i] = r_lo * std::pow(q, static_cast<double>(i));
    radii.back() = r0;
    return radii;
}

NondegeneracyReport nondegeneracy_check(const MetricChart& chart, const Grid& grid,
                                        const ShapeResult& result,
                                        const std::vector<Point>& points,
                                        const std::vector<double>& radii)
{
    NondegeneracyReport rep;
    rep.points = points;
    rep.c_emp = std::numeric_limits<double>::infinity();
    const Field vol = cell_volumes(chart, grid);
    const double rmax = *std::max_element(radii.begin(), radii.end());
    for (const Point& x0 : points) {
        const double w = physical_spacing(chart, grid, x0);
        const auto d = geodesic_distance_field(chart, grid, x0, rmax + 2.0 * w);
        double c = std::numeric_limits<double>::infinity();
        for (double r : radii)
            c = std::min(c, sphere_average(grid, vol, result.u, d.values, r, w) / r);
        rep.c_point.push_back(c);
        rep.c_emp = std::min(rep.c_emp, c);
    }
    return rep;
}

GrowthReport growth_bound_check(const MetricChart& chart, const Grid& grid,
                                const ShapeResult& result, const std::vector<Point>& points,
                                const std::vector<double>& radii)
{
    GrowthReport rep;
    const Field vol = cell_volumes(chart, grid);
    const double rmax = *std::max_element(radii.begin(), radii.end());
    for (const Point& x0 : points) {
        const double w = physical_spacing(chart, grid, x0);
        const auto d = geodesic_distance_field(chart, grid, x0, rmax + 2.0 * w);
        for (double r : radii) {
            bool inside = true;
            for (std::size_t p = 0; p < grid.size() && inside; ++p)
                if (d.values[p] <= r && !result.support[p])
                    inside = false;
            if (inside)
                continue;
            ++rep.samples;
            rep.C_emp = std::max(rep.C_emp,
                                 sphere_average(grid, vol, result.u, d.values, r, w) / r);
        }
    }
    return rep;
}

nlohmann::json to_json(const MultiplierEstimate& m)
{
    return {{"Lambda", m.Lambda},
            {"band_width", m.band_width},
            {"dispersion", m.dispersion},
            {"samples", m.samples.size()}};
}

nlohmann::json to_json(const WeissProfile& w)
{
    return {{"x0", {w.x0[0], w.x0[1]}}, {"radii", w.radii}, {"phi", w.phi},
            {"error", w.error},         {"C", w.C},         {"phi0", w.phi0},
            {"Lambda", w.Lambda},       {"monotone", w.monotone}};
}

nlohmann::json to_json(const DensityReport& d)
{
    return {{"x0", {d.x0[0], d.x0[1]}}, {"radii", d.radii},        {"theta", d.theta},
            {"delta", d.delta},         {"theta0", d.theta0},      {"all_within", d.all_within}};
}

void write_diagnostics_csv(std::ostream& os, const std::vector<WeissProfile>& weiss,
                           const std::vector<DensityReport>& density)
{
    if (weiss.size() != density.size())
        throw std::invalid_argument("diagnostics csv: profile and density counts differ");
    os << "x0,r,phi,theta,Lambda\n" << std::setprecision(12);
    for (std::size_t k = 0; k < weiss.size(); ++k) {
        const auto& w = weiss[k];
        const auto& d = density[k];
        if (w.radii != d.radii)
            throw std::invalid_argument("diagnostics csv: radii differ between reports");
        for (std::size_t i = 0; i < w.radii.size(); ++i)
            os << w.x0[0] << ';' << w.x0[1] << ',' << w.radii[i] << ',' << w.phi[i] << ','
               << d.theta[i] << ',' << w.Lambda << '\n';
    }
}

} // namespace fk
