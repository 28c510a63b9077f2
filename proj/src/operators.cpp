#include <cmath>
#include <sstream>

#include "fk/discretize.hpp"

namespace fk {

namespace {

// sqrt|g| g^{-1} at x, with the location in the error message
Mat2 flux_tensor(const MetricChart& chart, const Point& x)
{
    try {
        const auto t = MetricTensor::from(chart.g(x));
        return t.sqrt_det * t.g_inv;
    } catch (const std::domain_error& e) {
        std::ostringstream os;
        os << e.what() << " at (" << x[0] << ", " << x[1] << ")";
        throw std::domain_error(os.str());
    }
}

} // namespace

DiscreteOperatorPair assemble_operators(const MetricChart& chart, const Grid& grid)
{
    const std::size_t N = grid.size();
    const double h0 = grid.h(0);
    const double h1 = grid.h(1);
    DiscreteOperatorPair ops;
    ops.M = cell_volumes(chart, grid);
    ops.axis_edges.reserve(2 * N);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * N);
    auto add_edge = [&](std::size_t p, std::size_t q, double c) {
        trip.emplace_back(p, p, c);
        trip.emplace_back(q, q, c);
        trip.emplace_back(p, q, -c);
        trip.emplace_back(q, p, -c);
    };

    for (std::size_t p = 0; p < N; ++p) {
        auto [i, j] = grid.ij(p);
        const Point x = grid.node(p);
        for (int axis = 0; axis < 2; ++axis) {
            const double ratio = axis == 0 ? h1 / h0 : h0 / h1;
            Point off = Point::Zero();
            off[axis] = 0.5 * (axis == 0 ? h0 : h1);
            const int di = axis == 0 ? 1 : 0;
            const int dj = axis == 1 ? 1 : 0;
            if (auto q = grid.neighbor(p, di, dj)) {
                const double c = flux_tensor(chart, x + off)(axis, axis) * ratio;
                add_edge(p, *q, c);
                ops.axis_edges.push_back({p, *q, c});
            } else if (grid.kind(axis) == AxisKind::dirichlet) {
                trip.emplace_back(p, p, 2.0 * flux_tensor(chart, x + off)(axis, axis) * ratio);
            }
            const int idx = axis == 0 ? i : j;
            if (idx == 0 && grid.kind(axis) == AxisKind::dirichlet)
                trip.emplace_back(p, p, 2.0 * flux_tensor(chart, x - off)(axis, axis) * ratio);
        }
        // cross-derivative coupling on the quad [p, p + e0 + e1]
        auto q10 = grid.neighbor(p, 1, 0);
        auto q01 = grid.neighbor(p, 0, 1);
        auto q11 = grid.neighbor(p, 1, 1);
        if (q10 && q01 && q11) {
            const Mat2 g = chart.g(x + Point(0.5 * h0, 0.5 * h1));
            if (g(0, 1) != 0.0) {
                const double a12 = flux_tensor(chart, x + Point(0.5 * h0, 0.5 * h1))(0, 1);
                add_edge(p, *q11, 0.5 * a12);
                add_edge(*q10, *q01, -0.5 * a12);
            }
        }
    }
    ops.K.resize(N, N);
    ops.K.setFromTriplets(trip.begin(), trip.end());
    ops.K.makeCompressed();
    return ops;
}

Field RestrictedOperators::extend(const Field& local_values) const
{
    Field out = Field::Zero(local.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        out[nodes[k]] = local_values[k];
    return out;
}

Field RestrictedOperators::restrict_field(const Field& global_values) const
{
    Field out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        out[k] = global_values[nodes[k]];
    return out;
}

RestrictedOperators restrict_to_support(const DiscreteOperatorPair& ops, const Indicator& support)
{
    const std::size_t N = ops.M.size();
    if (support.size() != N)
        throw std::invalid_argument("support size does not match the operators");
    RestrictedOperators r;
    r.local.assign(N, -1);
    for (std::size_t p = 0; p < N; ++p)
        if (support[p]) {
            r.local[p] = static_cast<std::ptrdiff_t>(r.nodes.size());
            r.nodes.push_back(p);
        }
    if (r.nodes.empty())
        throw std::invalid_argument("cannot restrict operators to an empty support");

    const std::size_t n = r.nodes.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * n);
    Field rowsum = Field::Zero(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto col = static_cast<Eigen::Index>(r.nodes[k]);
        for (SparseMatrix::InnerIterator it(ops.K, col); it; ++it) {
            const auto l = r.local[static_cast<std::size_t>(it.row())];
            if (l >= 0) {
                trip.emplace_back(l, k, it.value());
                rowsum[k] += it.value();
            }
        }
    }
    for (const auto& e : ops.axis_edges) {
        const auto lp = r.local[e.p];
        const auto lq = r.local[e.q];
        if ((lp >= 0) == (lq >= 0))
            continue;
        const auto l = lp >= 0 ? lp : lq;
        trip.emplace_back(l, l, e.c);
        rowsum[l] += e.c;
    }
    r.K.resize(n, n);
    r.K.setFromTriplets(trip.begin(), trip.end());
    r.K.makeCompressed();
    r.M = r.restrict_field(ops.M);
    // any positive row sum means a Dirichlet face is present
    const double scale = r.K.diagonal().cwiseAbs().maxCoeff();
    r.has_boundary = (rowsum.array() > 1e-12 * scale).any();
    return r;
}

double dirichlet_energy(const DiscreteOperatorPair& ops, const Field& w)
{
    double e = w.dot(ops.K * w);
    for (const auto& edge : ops.axis_edges) {
        const bool a = w[edge.p] != 0.0;
        const bool b = w[edge.q] != 0.0;
        if (a != b) {
            const double v = a ? w[edge.p] : w[edge.q];
            e += edge.c * v * v;
        }
    }
    return e;
}

double mass_norm2(const DiscreteOperatorPair& ops, const Field& w)
{
    return (ops.M.array() * w.array().square()).sum();
}

} // namespace fk
