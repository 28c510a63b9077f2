#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "fk/discretize.hpp"

namespace fk {

Field gradient_norm_field(const MetricChart& chart, const Grid& grid, const Field& u)
{
    const std::size_t N = grid.size();
    Field out(N);
    for (std::size_t p = 0; p < N; ++p) {
        Point du;
        for (int a = 0; a < 2; ++a) {
            const int di = a == 0 ? 1 : 0;
            const int dj = a == 1 ? 1 : 0;
            auto fwd = grid.neighbor(p, di, dj);
            auto bwd = grid.neighbor(p, -di, -dj);
            const double h = grid.h(a);
            if (fwd && bwd)
                du[a] = (u[*fwd] - u[*bwd]) / (2.0 * h);
            else if (fwd)
                du[a] = (u[*fwd] - u[p]) / h;
            else if (bwd)
                du[a] = (u[p] - u[*bwd]) / h;
            else
                du[a] = 0.0;
        }
        const auto t = MetricTensor::from(chart.g(grid.node(p)));
        out[p] = std::sqrt(std::max(du.dot(t.g_inv * du), 0.0));
    }
    return out;
}

double integrate(const MetricChart& chart, const Grid& grid, const Field& f)
{
    return cell_volumes(chart, grid).dot(f);
}

double physical_spacing(const MetricChart& chart, const Grid& grid, const Point& x)
{
    const Mat2 g = chart.g(x);
    return std::max(std::sqrt(g(0, 0)) * grid.h(0), std::sqrt(g(1, 1)) * grid.h(1));
}

double ball_weight(double d, double r, double w)
{
    const double s = (r - d) / w;
    if (s <= -1.0)
        return 0.0;
    if (s <= 0.0)
        return 0.5 * (1.0 + s) * (1.0 + s);
    if (s <= 1.0)
        return 1.0 - 0.5 * (1.0 - s) * (1.0 - s);
    return 1.0;
}

double sphere_average(const Grid& grid, const Field& cell_vol, const Field& u,
                      const Field& distance, double r, double width)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double w = shell_weight(distance[p], r, width);
        if (w == 0.0)
            continue;
        num += w * cell_vol[p] * u[p];
        den += w * cell_vol[p];
    }
    if (!(den > 0.0))
        throw std::invalid_argument("sphere average: empty annulus");
    return num / den;
}

double sphere_average(const MetricChart& chart, const Grid& grid, const Field& u, const Point& x0,
                      double r)
{
    const double w = physical_spacing(chart, grid, x0);
    if (r < 2.0 * w)
        throw std::invalid_argument("sphere average radius " + std::to_string(r) +
                                    " is below two cells (" + std::to_string(2.0 * w) + ")");
    const auto d = geodesic_distance_field(chart, grid, x0, r + 2.0 * w);
    return sphere_average(grid, cell_volumes(chart, grid), u, d.values, r, w);
}

void write_field_csv(std::ostream& os, const Grid& grid, const Field& f)
{
    os << "i,j,x1,x2,value\n" << std::setprecision(17);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        auto [i, j] = grid.ij(p);
        const Point x = grid.node(p);
        os << i << ',' << j << ',' << x[0] << ',' << x[1] << ',' << f[p] << '\n';
    }
}

void write_field_csv(const std::string& path, const Grid& grid, const Field& f)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_field_csv(os, grid, f);
}

Field indicator_field(const Indicator& s)
{
    Field f(s.size());
    for (std::size_t p = 0; p < s.size(); ++p)
        f[p] = s[p] ? 1.0 : 0.0;
    return f;
}

} // namespace fk
