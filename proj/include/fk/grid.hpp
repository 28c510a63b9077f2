#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "fk/manifold.hpp"

namespace fk {

/// Uniform tensor grid over a chart rectangle.
///
/// Node (i, j) has flat index i * n1 + j. Periodic axes place nodes at
/// lo + i h (h = L / n); the other axes are cell centred at lo + (i + 1/2) h,
/// so every node owns the cell [x - h/2, x + h/2] and the cells tile the chart.
class Grid {
public:
    Grid(const MetricChart& chart, int n0, int n1);

    int n(int axis) const { return n_[axis]; }
    double h(int axis) const { return h_[axis]; }
    AxisKind kind(int axis) const { return kind_[axis]; }
    std::size_t size() const { return static_cast<std::size_t>(n_[0]) * n_[1]; }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_[1] + j; }
    std::array<int, 2> ij(std::size_t p) const
    {
        return {static_cast<int>(p / n_[1]), static_cast<int>(p % n_[1])};
    }

    double coord(int axis, int i) const
    {
        return kind_[axis] == AxisKind::periodic ? lo_[axis] + i * h_[axis]
                                                 : lo_[axis] + (i + 0.5) * h_[axis];
    }
    Point node(std::size_t p) const
    {
        auto [i, j] = ij(p);
        return {coord(0, i), coord(1, j)};
    }

    /// Neighbour at offset (di, dj); empty when it falls off a non-periodic edge.
    std::optional<std::size_t> neighbor(std::size_t p, int di, int dj) const;

    /// Nearest node to a chart point.
    std::size_t nearest(const Point& x) const;

    /// True when p lies within `rows` rows of a dirichlet edge.
    bool near_truncation(std::size_t p, int rows) const;

private:
    std::array<int, 2> n_;
    std::array<double, 2> h_;
    std::array<double, 2> lo_;
    std::array<AxisKind, 2> kind_;
};

/// sqrt|g|(node) h0 h1 for every node.
Field cell_volumes(const MetricChart& chart, const Grid& grid);

double indicator_volume(const Field& cell_vol, const Indicator& support);

} // namespace fk
