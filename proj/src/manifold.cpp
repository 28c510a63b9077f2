#include "fk/manifold.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace fk {

std::string to_string(AxisKind kind)
{
    switch (kind) {
    case AxisKind::periodic:
        return "periodic";
    case AxisKind::dirichlet:
        return "dirichlet";
    case AxisKind::pole:
        return "pole";
    }
    return "?";
}

AxisKind axis_kind_from_string(const std::string& s)
{
    if (s == "periodic")
        return AxisKind::periodic;
    if (s == "dirichlet")
        return AxisKind::dirichlet;
    if (s == "pole")
        return AxisKind::pole;
    throw std::invalid_argument("unknown boundary kind '" + s + "'");
}

bool is_spd(const Mat2& g)
{
    if (!g.allFinite() || g(0, 1) != g(1, 0))
        return false;
    return g(0, 0) > 0.0 && g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) > 0.0;
}

MetricTensor MetricTensor::from(const Mat2& g)
{
    if (!is_spd(g)) {
        std::ostringstream os;
        os << "metric is not symmetric positive definite: [" << g(0, 0) << ", " << g(0, 1)
           << "; " << g(1, 0) << ", " << g(1, 1) << "]";
        throw std::domain_error(os.str());
    }
    const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    MetricTensor t;
    t.g = g;
    t.g_inv << g(1, 1) / det, -g(0, 1) / det, -g(1, 0) / det, g(0, 0) / det;
    t.sqrt_det = std::sqrt(det);
    return t;
}

MetricChart::MetricChart(std::string name, std::array<double, 2> lo, std::array<double, 2> hi,
                         std::array<AxisKind, 2> kinds, MetricFn metric, nlohmann::json descriptor)
    : name_(std::move(name)), lo_(lo), hi_(hi), kinds_(kinds), metric_(std::move(metric)),
      descriptor_(std::move(descriptor))
{
    for (int a = 0; a < 2; ++a)
        if (!(hi_[a] > lo_[a]))
            throw std::invalid_argument("chart '" + name_ + "': empty domain on axis " +
                                        std::to_string(a));
    injectivity_scale_ = 0.5 * std::min(length(0), length(1));
}

Mat2 MetricChart::g(const Point& x) const { return metric_(wrap(x)); }

bool MetricChart::contains(const Point& x) const
{
    constexpr double slack = 1e-12;
    for (int a = 0; a < 2; ++a) {
        if (periodic(a))
            continue;
        const double s = slack * length(a);
        if (x[a] < lo_[a] - s || x[a] > hi_[a] + s)
            return false;
    }
    return x.allFinite();
}

Point MetricChart::wrap(const Point& x) const
{
    Point y = x;
    for (int a = 0; a < 2; ++a) {
        if (!periodic(a))
            continue;
        const double L = length(a);
        y[a] = lo_[a] + std::fmod(x[a] - lo_[a], L);
        if (y[a] < lo_[a])
            y[a] += L;
        if (y[a] >= hi_[a])
            y[a] -= L;
    }
    return y;
}

Point MetricChart::displacement(const Point& a, const Point& b) const
{
    Point d = b - a;
    for (int k = 0; k < 2; ++k) {
        if (!periodic(k))
            continue;
        const double L = length(k);
        d[k] -= L * std::round(d[k] / L);
    }
    return d;
}

MetricChart MetricChart::scaled(double c) const
{
    if (!(c > 0.0))
        throw std::invalid_argument("metric scale factor must be positive");
    nlohmann::json descriptor = descriptor_;
    descriptor["scale"] = descriptor_.value("scale", 1.0) * c;
    MetricFn base = metric_;
    const double c2 = c * c;
    MetricChart out(name_, lo_, hi_, kinds_, [base, c2](const Point& x) { return c2 * base(x); },
                    std::move(descriptor));
    out.injectivity_scale_ = injectivity_scale_ * c;
    if (embedding_) {
        auto e = *embedding_;
        out.embedding_ = [e, c](const Point& x) -> Eigen::Vector3d { return c * e(x); };
    }
    return out;
}

MetricTensor metric_at(const MetricChart& chart, const Point& x)
{
    if (!chart.contains(x)) {
        std::ostringstream os;
        os << "point (" << x[0] << ", " << x[1] << ") is outside chart '" << chart.name() << "'";
        throw std::out_of_range(os.str());
    }
    return MetricTensor::from(chart.g(x));
}

namespace {

nlohmann::json base_descriptor(const std::string& name, std::array<double, 2> lo,
                         std::array<double, 2> hi, std::array<AxisKind, 2> kinds)
{
    return {{"name", name},
            {"domain", {{lo[0], hi[0]}, {lo[1], hi[1]}}},
            {"periodic", {kinds[0] == AxisKind::periodic, kinds[1] == AxisKind::periodic}},
            {"boundary", {to_string(kinds[0]), to_string(kinds[1])}}};
}

} // namespace

MetricChart builtin_flat_torus(double L1, double L2)
{
    if (!(L1 > 0.0) || !(L2 > 0.0))
        throw std::invalid_argument("flat torus lengths must be positive");
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{L1, L2};
    std::array<AxisKind, 2> kinds{AxisKind::periodic, AxisKind::periodic};
    auto descriptor = base_descriptor("flat_torus", lo, hi, kinds);
    descriptor["params"] = {{"L1", L1}, {"L2", L2}};
    return MetricChart("flat_torus", lo, hi, kinds, [](const Point&) { return Mat2::Identity(); },
                       std::move(descriptor));
}

MetricChart builtin_sphere(double R, double pole_clamp)
{
    if (!(R > 0.0))
        throw std::invalid_argument("sphere radius must be positive");
    constexpr double pi = std::numbers::pi;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{pi, 2.0 * pi};
    std::array<AxisKind, 2> kinds{AxisKind::pole, AxisKind::periodic};
    auto descriptor = base_descriptor("sphere", lo, hi, kinds);
    descriptor["params"] = {{"R", R}};
    const double s_min = std::sin(pole_clamp);
    MetricChart chart("sphere", lo, hi, kinds,
                      [R, s_min](const Point& x) {
                          const double s = std::max(std::sin(x[0]), s_min);
                          Mat2 g;
                          g << R * R, 0.0, 0.0, R * R * s * s;
                          return g;
                      },
                      std::move(descriptor));
    chart.set_injectivity_scale(pi * R);
    chart.set_embedding([R](const Point& x) -> Eigen::Vector3d {
        return {R * std::sin(x[0]) * std::cos(x[1]), R * std::sin(x[0]) * std::sin(x[1]),
                R * std::cos(x[0])};
    });
    return chart;
}

MetricChart builtin_catenoid(double neck, double T)
{
    if (!(neck > 0.0) || !(T > 0.0))
        throw std::invalid_argument("catenoid neck and truncation must be positive");
    constexpr double pi = std::numbers::pi;
    std::array<double, 2> lo{0.0, -T};
    std::array<double, 2> hi{2.0 * pi, T};
    std::array<AxisKind, 2> kinds{AxisKind::periodic, AxisKind::dirichlet};
    auto descriptor = base_descriptor("catenoid", lo, hi, kinds);
    descriptor["params"] = {{"neck", neck}, {"T", T}};
    MetricChart chart("catenoid", lo, hi, kinds,
                      [neck](const Point& x) {
                          Mat2 g;
                          g << x[1] * x[1] + neck * neck, 0.0, 0.0, 1.0;
                          return g;
                      },
                      std::move(descriptor));
    // the neck circle is the shortest closed geodesic
    chart.set_injectivity_scale(pi * neck);
    chart.set_embedding([neck](const Point& x) -> Eigen::Vector3d {
        const double rho = std::sqrt(x[1] * x[1] + neck * neck);
        return {rho * std::cos(x[0]), rho * std::sin(x[0]), neck * std::asinh(x[1] / neck)};
    });
    return chart;
}

namespace {

struct SampleLattice {
    int n[2];
    double lo[2];
    double h[2];
    bool periodic[2];

    // fractional sample coordinate along one axis
    void locate(int a, double x, int& i0, int& i1, double& w) const
    {
        double s = (x - lo[a]) / h[a] - (periodic[a] ? 0.0 : 0.5);
        if (periodic[a]) {
            const double f = std::floor(s);
            i0 = static_cast<int>(f) % n[a];
            if (i0 < 0)
                i0 += n[a];
            i1 = (i0 + 1) % n[a];
            w = s - f;
            return;
        }
        if (s <= 0.0) {
            i0 = i1 = 0;
            w = 0.0;
        } else if (s >= n[a] - 1) {
            i0 = i1 = n[a] - 1;
            w = 0.0;
        } else {
            i0 = static_cast<int>(std::floor(s));
            i1 = i0 + 1;
            w = s - i0;
        }
    }
};

} // namespace

MetricChart builtin_custom(std::string name, std::array<double, 2> lo, std::array<double, 2> hi,
                           std::array<AxisKind, 2> kinds, MetricSamples samples)
{
    const int n0 = samples.n0;
    const int n1 = samples.n1;
    const std::size_t count = static_cast<std::size_t>(n0) * n1;
    if (n0 < 1 || n1 < 1 || samples.g11.size() != count || samples.g12.size() != count ||
        samples.g22.size() != count)
        throw std::invalid_argument("custom chart: sample arrays do not match " +
                                    std::to_string(n0) + "x" + std::to_string(n1));
    for (std::size_t p = 0; p < count; ++p) {
        Mat2 g;
        g << samples.g11[p], samples.g12[p], samples.g12[p], samples.g22[p];
        if (!is_spd(g))
            throw std::domain_error("custom chart: metric sample at node " + std::to_string(p) +
                                    " (i=" + std::to_string(p / n1) +
                                    ", j=" + std::to_string(p % n1) +
                                    ") is not positive definite");
    }
    SampleLattice lat{};
    for (int a = 0; a < 2; ++a) {
        lat.n[a] = a == 0 ? n0 : n1;
        lat.lo[a] = lo[a];
        lat.h[a] = (hi[a] - lo[a]) / lat.n[a];
        lat.periodic[a] = kinds[a] == AxisKind::periodic;
    }
    auto descriptor = base_descriptor(name, lo, hi, kinds);
    descriptor["samples"] = {{"n", {n0, n1}}, {"g11", samples.g11}, {"g12", samples.g12},
                       {"g22", samples.g22}};
    auto data = std::make_shared<const MetricSamples>(std::move(samples));
    auto fn = [data, lat](const Point& x) {
        int i0, i1, j0, j1;
        double wi, wj;
        lat.locate(0, x[0], i0, i1, wi);
        lat.locate(1, x[1], j0, j1, wj);
        const int n1 = lat.n[1];
        auto at = [&](const std::vector<double>& v) {
            const double a = v[i0 * n1 + j0] * (1 - wj) + v[i0 * n1 + j1] * wj;
            const double b = v[i1 * n1 + j0] * (1 - wj) + v[i1 * n1 + j1] * wj;
            return a * (1 - wi) + b * wi;
        };
        Mat2 g;
        const double off = at(data->g12);
        g << at(data->g11), off, off, at(data->g22);
        return g;
    };
    return MetricChart(std::move(name), lo, hi, kinds, std::move(fn), std::move(descriptor));
}

MetricChart builtin_conformal(std::string name, std::array<double, 2> lo,
                              std::array<double, 2> hi, std::array<AxisKind, 2> kinds, int n0,
                              int n1, const std::vector<double>& psi)
{
    if (psi.size() != static_cast<std::size_t>(n0) * n1)
        throw std::invalid_argument("conformal chart: psi has wrong size");
    MetricSamples s;
    s.n0 = n0;
    s.n1 = n1;
    s.g11.resize(psi.size());
    s.g12.assign(psi.size(), 0.0);
    s.g22.resize(psi.size());
    for (std::size_t p = 0; p < psi.size(); ++p)
        s.g11[p] = s.g22[p] = std::exp(2.0 * psi[p]);
    return builtin_custom(std::move(name), lo, hi, kinds, std::move(s));
}

} // namespace fk
