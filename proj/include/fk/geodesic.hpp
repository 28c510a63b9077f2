#pragma once

#include <limits>

#include "fk/grid.hpp"

namespace fk {

struct DistanceField {
    Field values;
    Point source;
};

/// First-order fast marching for the metric eikonal equation |grad d|_g = 1.
///
/// Nodes in a small index box around x0 are initialised with the local
/// metric length of the chart displacement; the front then advances with
/// two-point (triangle) updates over the 8-neighbourhood. When x0 sits on a
/// pole edge the whole adjacent row is seeded. Propagation stops once the
/// front passes `max_distance`; untouched nodes keep +inf.
DistanceField geodesic_distance_field(const MetricChart& chart, const Grid& grid, const Point& x0,
                                      double max_distance = std::numeric_limits<double>::infinity());

/// {d(., x0) <= r}. Throws TruncationError if the ball reaches within
/// `margin_rows` rows of a dirichlet edge.
Indicator geodesic_ball(const MetricChart& chart, const Grid& grid, const Point& x0, double r,
                        int margin_rows = 1);

struct BallFit {
    double radius = 0.0;
    double volume = 0.0;
    Indicator support;
};

/// Radius of the volume-m geodesic ball about x0.
///
/// Nodes are ranked by distance (ties by index); the prefix whose cell volume
/// is closest to m is the ball, so |volume - m| stays within one cell. The
/// radius is the midpoint between the last included and first excluded
/// distance.
BallFit ball_radius_for_volume(const MetricChart& chart, const Grid& grid, const Point& x0,
                               double m, int margin_rows = 1);

} // namespace fk
