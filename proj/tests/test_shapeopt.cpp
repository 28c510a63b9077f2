#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fk/geodesic.hpp"
#include "fk/shapeopt.hpp"
#include "oracles/radial_shooting.hpp"

using namespace fk;
using doctest::Approx;

constexpr double pi = std::numbers::pi;

namespace {

struct Torus {
    MetricChart chart = builtin_flat_torus(2 * pi, 2 * pi);
    Grid grid;
    DiscreteOperatorPair ops;
    explicit Torus(int n) : grid(chart, n, n), ops(assemble_operators(chart, grid)) {}
};

const Torus& torus256()
{
    static const Torus t(256);
    return t;
}

const ShapeResult& torus_minimiser()
{
    static const ShapeResult r = fk_minimize(torus256().chart, torus256().grid, torus256().ops, 0.5);
    return r;
}

} // namespace

TEST_CASE("evaluate_J")
{
    const auto& t = torus256();
    const auto& r = torus_minimiser();
    CHECK(evaluate_J(t.ops, Field::Zero(t.grid.size()), 3.0) == 0.0);
    CHECK(std::abs(evaluate_J(t.ops, r.u, r.lambda1)) <= 1e-6 * r.lambda1);
    CHECK(evaluate_J(t.chart, t.grid, r.u, r.lambda1) == Approx(evaluate_J(t.ops, r.u, r.lambda1)));

    const Point c = t.grid.node(t.grid.index(128, 128));
    const auto big = ball_radius_for_volume(t.chart, t.grid, c, 0.8).support;
    const auto sp = smallest_eigenpair(t.ops, big);
    CHECK(evaluate_J(t.ops, sp.u, r.lambda1) < 0.0);
}

TEST_CASE("volume_threshold")
{
    const auto& t = torus256();
    const Field vol = cell_volumes(t.chart, t.grid);
    const double cell = vol.maxCoeff();
    const double h = t.grid.h(0);
    const Point c = t.grid.node(t.grid.index(100, 90));

    SUBCASE("radial profile gives a ball")
    {
        const auto d = geodesic_distance_field(t.chart, t.grid, c);
        Field u(t.grid.size());
        for (std::size_t p = 0; p < t.grid.size(); ++p)
            u[p] = std::exp(-d.values[p]);
        const auto s = volume_threshold(vol, u, pi / 4);
        CHECK(std::abs(indicator_volume(vol, s) - pi / 4) <= cell);
        for (std::size_t p = 0; p < t.grid.size(); ++p) {
            if (d.values[p] < 0.5 - h)
                REQUIRE(s[p]);
            if (d.values[p] > 0.5 + h)
                REQUIRE_FALSE(s[p]);
        }
    }
    SUBCASE("indicator of a set returns the set")
    {
        Indicator a(t.grid.size(), 0);
        for (std::size_t p = 0; p < t.grid.size(); p += 5)
            a[p] = 1;
        const auto s = volume_threshold(vol, indicator_field(a), indicator_volume(vol, a));
        CHECK(s == a);
    }
    SUBCASE("nearly everything")
    {
        Field u = Field::LinSpaced(t.grid.size(), 2.0, 1.0);
        const double total = vol.sum();
        const auto s = volume_threshold(vol, u, total - 10 * cell);
        CHECK(std::abs(total - indicator_volume(vol, s) - 10 * cell) <= cell);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(volume_threshold(vol, Field::Zero(t.grid.size()), 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(volume_threshold(vol, Field::Ones(t.grid.size()), 1e3),
                        std::invalid_argument);
        CHECK_THROWS_AS(volume_threshold(vol, Field::Ones(t.grid.size()), 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("dilate, erode and symmetric difference")
{
    const Torus t(32);
    Indicator s(t.grid.size(), 0);
    s[t.grid.index(10, 10)] = 1;
    const auto d1 = dilate(t.grid, s, 1);
    CHECK(std::count(d1.begin(), d1.end(), 1) == 9);
    CHECK(erode(t.grid, d1, 1) == s);
    const Field vol = cell_volumes(t.chart, t.grid);
    CHECK(symmetric_difference(vol, s, d1) == Approx(8 * vol[0]));
}

TEST_CASE("flat torus minimiser against the disk oracle")
{
    const auto& t = torus256();
    const auto& r = torus_minimiser();
    const double oracle_lambda = oracle::disk_lambda(0.5);
    CHECK(r.converged);
    CHECK(std::abs(r.lambda1 / oracle_lambda - 1.0) <= 0.02);

    const Field vol = cell_volumes(t.chart, t.grid);
    CHECK(std::abs(r.volume - 0.5) <= vol.maxCoeff());
    CHECK(ball_deviation(t.chart, t.grid, r.support, 0.5) <= 0.05);

    // accepted trace is nonincreasing
    double last = std::numeric_limits<double>::infinity();
    for (const auto& e : r.trace)
        if (e.accepted) {
            CHECK(e.lambda <= last);
            last = e.lambda;
        }
    // recomputed from scratch
    EigenOptions o;
    CHECK(smallest_eigenpair(t.ops, r.support, o).lambda == Approx(r.lambda1).epsilon(1e-5));

    // within two cells of the volume-m ball about the barycentre
    const Point c = t.grid.node(support_barycenter(t.chart, t.grid, r.support));
    const auto d = geodesic_distance_field(t.chart, t.grid, c);
    const double R = std::sqrt(0.5 / pi);
    const double h = t.grid.h(0);
    for (std::size_t p = 0; p < t.grid.size(); ++p) {
        const bool in_ball = d.values[p] <= R;
        if (static_cast<bool>(r.support[p]) != in_ball)
            REQUIRE(std::abs(d.values[p] - R) <= 2 * h);
    }
}

TEST_CASE("ball and random-blob initialisations agree")
{
    const auto& t = torus256();
    ShapeOptions o;
    o.init = InitKind::random_blob;
    const auto blob = fk_minimize(t.chart, t.grid, t.ops, 0.5, o);
    const auto& ball = torus_minimiser();
    CHECK(std::abs(blob.lambda1 - ball.lambda1) <= 2 * o.tol * ball.lambda1);
    CHECK(std::abs(blob.lambda1 / oracle::disk_lambda(0.5) - 1.0) <= 0.02);
}

TEST_CASE("initial supports")
{
    const Torus t(64);
    const double cell = cell_volumes(t.chart, t.grid).maxCoeff();
    ShapeOptions o;
    for (auto kind : {InitKind::ball, InitKind::random_blob}) {
        o.init = kind;
        const auto s = initial_support(t.chart, t.grid, 1.0, o);
        CHECK(std::abs(indicator_volume(cell_volumes(t.chart, t.grid), s) - 1.0) <= cell);
        CHECK(initial_support(t.chart, t.grid, 1.0, o) == s);
    }
    CHECK(init_kind_from_string(to_string(InitKind::random_blob)) == InitKind::random_blob);
    CHECK_THROWS_AS(init_kind_from_string("square"), std::invalid_argument);
}

TEST_CASE("translation equivariance on the flat torus")
{
    const Torus t(128);
    ShapeOptions o;
    o.center = t.grid.node(t.grid.index(60, 60));
    const auto a = fk_minimize(t.chart, t.grid, t.ops, 0.5, o);
    o.center = t.grid.node(t.grid.index(76, 68));
    const auto b = fk_minimize(t.chart, t.grid, t.ops, 0.5, o);
    CHECK(a.lambda1 == b.lambda1);
    for (int i = 0; i < 128; ++i)
        for (int j = 0; j < 128; ++j)
            REQUIRE(a.support[t.grid.index(i, j)] ==
                    b.support[t.grid.index((i + 16) % 128, (j + 8) % 128)]);
}

TEST_CASE("unit sphere hemisphere")
{
    const auto sph = builtin_sphere(1.0);
    const Grid g(sph, 128, 256);
    const auto r = fk_minimize(sph, g, 2 * pi);
    CHECK(r.lambda1 == Approx(2.0).epsilon(0.02));
    CHECK(ball_deviation(sph, g, r.support, 2 * pi) <= 0.05);
}

TEST_CASE("Faber-Krahn profile on the flat torus")
{
    const auto& t = torus256();
    const auto prof = fk_profile(t.chart, t.grid, {0.2, 0.4, 0.8}, {}, 2);
    REQUIRE(prof.size() == 3);
    for (const auto& e : prof)
        CHECK(std::abs(e.fk / oracle::disk_lambda(e.m) - 1.0) <= 0.03);
    CHECK(prof[1].fk <= prof[0].fk * (1 + 2e-4));
    CHECK(prof[2].fk <= prof[1].fk * (1 + 2e-4));
    CHECK_THROWS_AS(fk_profile(t.chart, t.grid, {0.0}), std::invalid_argument);
}

TEST_CASE("catenoid minimisers prefer the ends")
{
    // theta cells widen like f(t); a fine theta axis keeps the resolution
    // comparable across the three centres
    const auto cat = builtin_catenoid(1.0, 8.0);
    const Grid g(cat, 1024, 256);
    const auto ops = assemble_operators(cat, g);
    ShapeOptions o;
    o.polish = false;
    double last = std::numeric_limits<double>::infinity();
    for (double t0 : {0.0, 1.5, 3.0}) {
        o.center = Point(pi, t0);
        const auto r = fk_minimize(cat, g, ops, 1.0, o);
        CHECK(r.lambda1 < last);
        last = r.lambda1;
    }
}

TEST_CASE("fk_minimize argument checks")
{
    const Torus t(32);
    CHECK_THROWS_AS(fk_minimize(t.chart, t.grid, t.ops, -1.0), std::invalid_argument);
    ShapeOptions o;
    o.damping = 1.0;
    CHECK_THROWS_AS(fk_minimize(t.chart, t.grid, t.ops, 1.0, o), std::invalid_argument);
}

TEST_CASE("support touching the truncation aborts")
{
    const auto cat = builtin_catenoid(1.0, 1.0);
    const Grid g(cat, 64, 32);
    CHECK_THROWS_AS(fk_minimize(cat, g, 6.0), TruncationError);
}

TEST_CASE("penalization certificate")
{
    const Torus t(128);
    const auto r = fk_minimize(t.chart, t.grid, t.ops, 0.5);
    const auto rep = penalization_certificate(t.chart, t.grid, t.ops, r, std::nullopt, 40, 3);
    CHECK(rep.candidates_tested == 40);
    CHECK(rep.violations.empty());
    CHECK(rep.mu_star == rep.fitted_mu);
    CHECK(rep.min_slack >= -1e-9 * r.lambda1);
    // same seed, same report
    const auto again = penalization_certificate(t.chart, t.grid, t.ops, r, std::nullopt, 40, 3);
    CHECK(again.fitted_mu == rep.fitted_mu);
    if (rep.fitted_mu > 0.0) {
        const auto low = penalization_certificate(t.chart, t.grid, t.ops, r,
                                                  0.5 * rep.fitted_mu, 40, 3);
        CHECK_FALSE(low.violations.empty());
    }
}
