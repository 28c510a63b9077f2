#include <cmath>

#include "fk/diagnostics.hpp"

namespace fk {

double perimeter_estimate(const MetricChart& chart, const Grid& grid, const Indicator& support)
{
    const double h0 = grid.h(0);
    const double h1 = grid.h(1);
    // crossing points on the quad edges, relative to the (0,0) corner
    const Point mid[4] = {{0.5 * h0, 0.0}, {h0, 0.5 * h1}, {0.5 * h0, h1}, {0.0, 0.5 * h1}};
    // segments per corner mask (bit k set = corner k inside, corners ccw from (0,0))
    static const int table[16][4] = {
        {-1, -1, -1, -1}, {3, 0, -1, -1}, {0, 1, -1, -1}, {3, 1, -1, -1},
        {1, 2, -1, -1},   {3, 0, 1, 2},   {0, 2, -1, -1}, {2, 3, -1, -1},
        {2, 3, -1, -1},   {0, 2, -1, -1}, {0, 1, 2, 3},   {1, 2, -1, -1},
        {3, 1, -1, -1},   {0, 1, -1, -1}, {3, 0, -1, -1}, {-1, -1, -1, -1}};

    double length = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        auto q10 = grid.neighbor(p, 1, 0);
        auto q11 = grid.neighbor(p, 1, 1);
        auto q01 = grid.neighbor(p, 0, 1);
        if (!q10 || !q11 || !q01)
            continue;
        const int mask = (support[p] ? 1 : 0) | (support[*q10] ? 2 : 0) | (support[*q11] ? 4 : 0) |
                         (support[*q01] ? 8 : 0);
        if (mask == 0 || mask == 15)
            continue;
        const Point x = grid.node(p);
        for (int s = 0; s < 4 && table[mask][s] >= 0; s += 2) {
            const Point a = mid[table[mask][s]];
            const Point b = mid[table[mask][s + 1]];
            const Point d = b - a;
            const Mat2 G = chart.g(x + 0.5 * (a + b));
            length += std::sqrt(d.dot(G * d));
        }
    }
    return length;
}

} // namespace fk
