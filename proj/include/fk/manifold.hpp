#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace fk {

using Point = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Field = Eigen::VectorXd;
/// Node-wise 0/1 membership over a grid.
using Indicator = std::vector<std::uint8_t>;

/// How an axis of the chart rectangle closes up.
///   periodic   - coordinate wraps around
///   dirichlet  - truncation boundary, fields vanish on it
///   pole       - metric degenerates on the boundary (sphere poles); no flux
enum class AxisKind { periodic, dirichlet, pole };

std::string to_string(AxisKind kind);
AxisKind axis_kind_from_string(const std::string& s);

/// Thrown when a ball or a support reaches a truncation boundary.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MetricTensor {
    Mat2 g;
    Mat2 g_inv;
    double sqrt_det = 0.0;

    /// Throws std::domain_error unless g is symmetric positive definite.
    static MetricTensor from(const Mat2& g);
};

bool is_spd(const Mat2& g);

/// A 2-D Riemannian manifold given by a single rectangular chart
/// [lo0,hi0] x [lo1,hi1] and a metric field g_ij(x).
class MetricChart {
public:
    using MetricFn = std::function<Mat2(const Point&)>;
    using EmbeddingFn = std::function<Eigen::Vector3d(const Point&)>;

    MetricChart(std::string name, std::array<double, 2> lo, std::array<double, 2> hi,
                std::array<AxisKind, 2> kinds, MetricFn metric, nlohmann::json descriptor);

    const std::string& name() const { return name_; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    double length(int axis) const { return hi_[axis] - lo_[axis]; }
    AxisKind kind(int axis) const { return kinds_[axis]; }
    bool periodic(int axis) const { return kinds_[axis] == AxisKind::periodic; }
    bool fully_periodic() const { return periodic(0) && periodic(1); }

    /// Raw metric coefficients, no domain check. Periodic coordinates are wrapped.
    Mat2 g(const Point& x) const;

    bool contains(const Point& x) const;

    /// Chart point with periodic coordinates wrapped into [lo, hi).
    Point wrap(const Point& x) const;

    /// Shortest chart displacement b - a honoring periodicity.
    Point displacement(const Point& a, const Point& b) const;

    /// Length scale below which geodesic balls are embedded discs.
    double injectivity_scale() const { return injectivity_scale_; }
    void set_injectivity_scale(double s) { injectivity_scale_ = s; }

    const std::optional<EmbeddingFn>& embedding() const { return embedding_; }
    void set_embedding(EmbeddingFn f) { embedding_ = std::move(f); }

    /// Serializable description: {name, domain, periodic, boundary, params | samples}.
    const nlohmann::json& descriptor() const { return descriptor_; }

    /// Same chart with metric c^2 g.
    MetricChart scaled(double c) const;

private:
    std::string name_;
    std::array<double, 2> lo_;
    std::array<double, 2> hi_;
    std::array<AxisKind, 2> kinds_;
    MetricFn metric_;
    nlohmann::json descriptor_;
    double injectivity_scale_;
    std::optional<EmbeddingFn> embedding_;
};

MetricTensor metric_at(const MetricChart& chart, const Point& x);

MetricChart builtin_flat_torus(double L1, double L2);

/// Chart (theta, phi) in [0,pi] x [0,2pi], g = diag(R^2, R^2 sin^2 theta).
/// sin(theta) is clamped from below at sin(pole_clamp) so the metric stays
/// invertible on the pole rows.
MetricChart builtin_sphere(double R, double pole_clamp = 1e-8);

/// Chart (theta, t) in [0,2pi] x [-T,T], g = diag(t^2 + neck^2, 1).
MetricChart builtin_catenoid(double neck, double T);

/// Metric sampled on an n0 x n1 node lattice laid out like Grid nodes
/// (periodic axes at lo + i h, other axes at lo + (i + 1/2) h), bilinearly
/// interpolated. Samples are row-major with axis 0 slowest.
struct MetricSamples {
    int n0 = 0;
    int n1 = 0;
    std::vector<double> g11;
    std::vector<double> g12;
    std::vector<double> g22;
};

MetricChart builtin_custom(std::string name, std::array<double, 2> lo, std::array<double, 2> hi,
                           std::array<AxisKind, 2> kinds, MetricSamples samples);

/// Conformally flat metric e^{2 psi} delta with psi sampled as in MetricSamples.
MetricChart builtin_conformal(std::string name, std::array<double, 2> lo,
                              std::array<double, 2> hi, std::array<AxisKind, 2> kinds, int n0,
                              int n1, const std::vector<double>& psi);

nlohmann::json chart_to_json(const MetricChart& chart);
MetricChart chart_from_json(const nlohmann::json& j);

} // namespace fk
