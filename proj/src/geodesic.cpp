#include "fk/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

namespace fk {

namespace {

// counter-clockwise ring of the 8-neighbourhood
constexpr int kRing[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

double metric_norm(const Mat2& G, const Point& v) { return std::sqrt(v.dot(G * v)); }

// min over s in [0,1] of ta + s (tb - ta) + |ea + s (eb - ea)|_G
double triangle_update(const Mat2& G, const Point& ea, const Point& eb, double ta, double tb)
{
    const Point d = eb - ea;
    const double delta = tb - ta;
    const double A = d.dot(G * d);
    const double B = ea.dot(G * d);
    const double C = ea.dot(G * ea);
    auto f = [&](double s) { return ta + s * delta + std::sqrt(std::max(A * s * s + 2 * B * s + C, 0.0)); };
    double best = std::min(f(0.0), f(1.0));
    const double gap = A - delta * delta;
    if (gap > 0.0 && A > 0.0) {
        const double disc = std::max(A * C - B * B, 0.0);
        const double s = (-B - delta * std::sqrt(disc / gap)) / A;
        if (s > 0.0 && s < 1.0)
            best = std::min(best, f(s));
    }
    return best;
}

} // namespace

DistanceField geodesic_distance_field(const MetricChart& chart, const Grid& grid, const Point& x0,
                                      double max_distance)
{
    if (!chart.contains(x0)) {
        std::ostringstream os;
        os << "distance source (" << x0[0] << ", " << x0[1] << ") is outside the chart";
        throw std::out_of_range(os.str());
    }
    const std::size_t N = grid.size();
    const double inf = std::numeric_limits<double>::infinity();
    DistanceField out{Field::Constant(N, inf), x0};
    Field& d = out.values;

    std::vector<Mat2> G(N);
    for (std::size_t p = 0; p < N; ++p)
        G[p] = chart.g(grid.node(p));

    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<std::uint8_t> alive(N, 0);

    auto seed = [&](std::size_t p, double v) {
        if (v < d[p]) {
            d[p] = v;
            heap.emplace(v, p);
        }
    };

    bool seeded_pole = false;
    if (chart.kind(0) == AxisKind::pole) {
        const double tol = 1e-12 * chart.length(0);
        const bool at_lo = std::abs(x0[0] - chart.lo(0)) <= tol;
        const bool at_hi = std::abs(x0[0] - chart.hi(0)) <= tol;
        if (at_lo || at_hi) {
            const int row = at_lo ? 0 : grid.n(0) - 1;
            const double dx = 0.5 * grid.h(0);
            for (int j = 0; j < grid.n(1); ++j) {
                const std::size_t p = grid.index(row, j);
                Point mid = grid.node(p);
                mid[0] = at_lo ? chart.lo(0) + 0.5 * dx : chart.hi(0) - 0.5 * dx;
                seed(p, std::sqrt(chart.g(mid)(0, 0)) * dx);
            }
            seeded_pole = true;
        }
    }
    if (!seeded_pole) {
        const std::size_t c = grid.nearest(x0);
        // integer offsets keep the seed exact (and mirror symmetric) at nodes
        const Point off = chart.displacement(x0, grid.node(c));
        constexpr int box = 2;
        for (int di = -box; di <= box; ++di)
            for (int dj = -box; dj <= box; ++dj) {
                auto q = grid.neighbor(c, di, dj);
                if (!q)
                    continue;
                const Point delta = off + Point(di * grid.h(0), dj * grid.h(1));
                seed(*q, metric_norm(chart.g(x0 + 0.5 * delta), delta));
            }
    }

    const Point h(grid.h(0), grid.h(1));
    while (!heap.empty()) {
        auto [v, p] = heap.top();
        heap.pop();
        if (alive[p] || v > d[p])
            continue;
        if (v > max_distance)
            break;
        alive[p] = 1;
        for (const auto& off : kRing) {
            auto q = grid.neighbor(p, off[0], off[1]);
            if (!q || alive[*q])
                continue;
            // recompute q from all of its finalised neighbours
            std::optional<std::size_t> ring[8];
            for (int k = 0; k < 8; ++k)
                ring[k] = grid.neighbor(*q, kRing[k][0], kRing[k][1]);
            double best = d[*q];
            for (int k = 0; k < 8; ++k) {
                if (!ring[k] || !alive[*ring[k]])
                    continue;
                const Point ea(kRing[k][0] * h[0], kRing[k][1] * h[1]);
                best = std::min(best, d[*ring[k]] + metric_norm(G[*q], ea));
                const int k2 = (k + 1) % 8;
                if (!ring[k2] || !alive[*ring[k2]])
                    continue;
                const Point eb(kRing[k2][0] * h[0], kRing[k2][1] * h[1]);
                best = std::min(best, triangle_update(G[*q], ea, eb, d[*ring[k]], d[*ring[k2]]));
            }
            if (best < d[*q]) {
                d[*q] = best;
                heap.emplace(best, *q);
            }
        }
    }
    for (std::size_t p = 0; p < N; ++p)
        if (!alive[p])
            d[p] = inf;
    return out;
}

namespace {

void check_truncation(const Grid& grid, const Indicator& ball, int margin_rows)
{
    for (std::size_t p = 0; p < ball.size(); ++p)
        if (ball[p] && grid.near_truncation(p, margin_rows)) {
            auto [i, j] = grid.ij(p);
            throw TruncationError("geodesic ball reaches the truncation boundary at node (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
        }
}

} // namespace

Indicator geodesic_ball(const MetricChart& chart, const Grid& grid, const Point& x0, double r,
                        int margin_rows)
{
    if (!(r > 0.0))
        throw std::invalid_argument("ball radius must be positive");
    const auto dist = geodesic_distance_field(chart, grid, x0, r * 1.5 + grid.h(0) + grid.h(1));
    Indicator ball(grid.size(), 0);
    for (std::size_t p = 0; p < grid.size(); ++p)
        ball[p] = dist.values[p] <= r ? 1 : 0;
    check_truncation(grid, ball, margin_rows);
    return ball;
}

BallFit ball_radius_for_volume(const MetricChart& chart, const Grid& grid, const Point& x0,
                               double m, int margin_rows)
{
    const Field vol = cell_volumes(chart, grid);
    const double total = vol.sum();
    if (!(m > 0.0) || !(m < total))
        throw std::invalid_argument("ball volume must lie strictly between 0 and the total volume");
    // grow the marching cutoff until the reached region holds the volume
    double cutoff = 2.0 * std::sqrt(m / std::numbers::pi);
    DistanceField dist;
    for (;;) {
        dist = geodesic_distance_field(chart, grid, x0, cutoff);
        double reached = 0.0;
        bool all = true;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (std::isfinite(dist.values[p]))
                reached += vol[p];
            else
                all = false;
        }
        if (all || reached > m + vol.maxCoeff() * 4.0)
            break;
        cutoff *= 2.0;
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist.values[a] < dist.values[b]; });

    double acc = 0.0;
    std::size_t count = 0;
    while (count < order.size() && acc + vol[order[count]] < m)
        acc += vol[order[count++]];
    // count nodes give acc < m; count + 1 reach >= m
    if (count < order.size() && (acc + vol[order[count]] - m) <= (m - acc)) {
        acc += vol[order[count]];
        ++count;
    }
    BallFit fit;
    fit.volume = acc;
    fit.support.assign(grid.size(), 0);
    for (std::size_t k = 0; k < count; ++k)
        fit.support[order[k]] = 1;
    const double last = count > 0 ? dist.values[order[count - 1]] : 0.0;
    const double next = count < order.size() ? dist.values[order[count]] : last;
    fit.radius = 0.5 * (last + next);
    check_truncation(grid, fit.support, margin_rows);
    return fit;
}

} // namespace fk
