#include "fk/grid.hpp"

#include <algorithm>
#include <cmath>

namespace fk {

Grid::Grid(const MetricChart& chart, int n0, int n1)
{
    if (n0 < 2 || n1 < 2)
        throw std::invalid_argument("grid needs at least 2 nodes per axis");
    n_ = {n0, n1};
    for (int a = 0; a < 2; ++a) {
        lo_[a] = chart.lo(a);
        h_[a] = chart.length(a) / n_[a];
        kind_[a] = chart.kind(a);
    }
}

std::optional<std::size_t> Grid::neighbor(std::size_t p, int di, int dj) const
{
    auto [i, j] = ij(p);
    int c[2] = {i + di, j + dj};
    for (int a = 0; a < 2; ++a) {
        if (c[a] >= 0 && c[a] < n_[a])
            continue;
        if (kind_[a] != AxisKind::periodic)
            return std::nullopt;
        c[a] = ((c[a] % n_[a]) + n_[a]) % n_[a];
    }
    return index(c[0], c[1]);
}

std::size_t Grid::nearest(const Point& x) const
{
    int c[2];
    for (int a = 0; a < 2; ++a) {
        const double off = kind_[a] == AxisKind::periodic ? 0.0 : 0.5;
        int k = static_cast<int>(std::lround((x[a] - lo_[a]) / h_[a] - off));
        if (kind_[a] == AxisKind::periodic)
            k = ((k % n_[a]) + n_[a]) % n_[a];
        else
            k = std::clamp(k, 0, n_[a] - 1);
        c[a] = k;
    }
    return index(c[0], c[1]);
}

bool Grid::near_truncation(std::size_t p, int rows) const
{
    auto [i, j] = ij(p);
    const int c[2] = {i, j};
    for (int a = 0; a < 2; ++a) {
        if (kind_[a] != AxisKind::dirichlet)
            continue;
        if (c[a] < rows || c[a] >= n_[a] - rows)
            return true;
    }
    return false;
}

Field cell_volumes(const MetricChart& chart, const Grid& grid)
{
    Field vol(grid.size());
    const double area = grid.h(0) * grid.h(1);
    for (std::size_t p = 0; p < grid.size(); ++p)
        vol[p] = MetricTensor::from(chart.g(grid.node(p))).sqrt_det * area;
    return vol;
}

double indicator_volume(const Field& cell_vol, const Indicator& support)
{
    double v = 0.0;
    for (std::size_t p = 0; p < support.size(); ++p)
        if (support[p])
            v += cell_vol[p];
    return v;
}

} // namespace fk
