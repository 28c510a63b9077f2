#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fk/diagnostics.hpp"
#include "fk/geodesic.hpp"
#include "oracles/radial_shooting.hpp"

using namespace fk;
using doctest::Approx;

constexpr double pi = std::numbers::pi;

namespace {

struct Solved {
    MetricChart chart;
    Grid grid;
    DiscreteOperatorPair ops;
    ShapeResult result;
    Solved(MetricChart c, int n, double m)
        : chart(std::move(c)), grid(chart, n, n), ops(assemble_operators(chart, grid)),
          result(fk_minimize(chart, grid, ops, m))
    {
    }
};

const Solved& torus(int n)
{
    static const Solved t256(builtin_flat_torus(2 * pi, 2 * pi), 256, 0.5);
    static const Solved t128(builtin_flat_torus(2 * pi, 2 * pi), 128, 0.5);
    return n == 256 ? t256 : t128;
}

double cell(const Solved& s) { return physical_spacing(s.chart, s.grid, Point(pi, pi)); }

} // namespace

TEST_CASE("boundary nodes")
{
    const auto chart = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(chart, 64, 64);

    SUBCASE("ball boundary is a closed 8-connected curve")
    {
        const auto s = geodesic_ball(chart, g, g.node(g.index(32, 32)), 1.0);
        const auto b = boundary_nodes(g, s);
        Indicator on(g.size(), 0);
        for (auto p : b)
            on[p] = 1;
        for (auto p : b) {
            int nb = 0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if ((di || dj) && on[*g.neighbor(p, di, dj)])
                        ++nb;
            REQUIRE(nb >= 2);
        }
        // one component
        std::vector<std::size_t> stack{b.front()};
        Indicator seen(g.size(), 0);
        seen[b.front()] = 1;
        std::size_t reached = 0;
        while (!stack.empty()) {
            const auto p = stack.back();
            stack.pop_back();
            ++reached;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const auto q = *g.neighbor(p, di, dj);
                    if (on[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
        }
        CHECK(reached == b.size());
    }
    SUBCASE("full minus one node")
    {
        Indicator s(g.size(), 1);
        const auto hole = g.index(10, 20);
        s[hole] = 0;
        auto b = boundary_nodes(g, s);
        std::sort(b.begin(), b.end());
        std::vector<std::size_t> expect{g.index(9, 20), g.index(10, 19), g.index(10, 21),
                                        g.index(11, 20)};
        std::sort(expect.begin(), expect.end());
        CHECK(b == expect);
    }
    SUBCASE("square perimeter count")
    {
        Indicator s(g.size(), 0);
        for (int i = 10; i < 30; ++i)
            for (int j = 10; j < 30; ++j)
                s[g.index(i, j)] = 1;
        const auto n = static_cast<int>(boundary_nodes(g, s).size());
        CHECK(std::abs(n - 4 * 20) <= 8);
    }
    CHECK_THROWS_AS(boundary_nodes(g, Indicator(g.size(), 0)), std::invalid_argument);
    CHECK_THROWS_AS(boundary_nodes(g, Indicator(g.size(), 1)), std::invalid_argument);
}

TEST_CASE("multiplier of a sine strip")
{
    // strip of width a = 1 across a thin periodic cylinder, h = a / 256
    const double a = 1.0, h = a / 256, Ly = 16 * h;
    const auto chart = builtin_flat_torus(2.0, Ly);
    const Grid g(chart, 512, 16);
    ShapeResult r;
    r.m = a * Ly;
    r.support.assign(g.size(), 0);
    r.u = Field::Zero(g.size());
    const double face = g.coord(0, 100) - 0.5 * h;
    const double amp = std::sqrt(2.0 / (a * Ly));
    for (int i = 100; i < 356; ++i)
        for (int j = 0; j < 16; ++j) {
            r.support[g.index(i, j)] = 1;
            r.u[g.index(i, j)] = amp * std::sin(pi * (g.coord(0, i) - face) / a);
        }
    const double exact = std::pow(pi / a * amp, 2);
    const auto est = lagrange_multiplier_estimate(chart, g, r, 3 * h);
    CHECK(est.Lambda == Approx(exact).epsilon(0.05));
    CHECK(est.dispersion < 1e-6);
    CHECK_THROWS_AS(lagrange_multiplier_estimate(chart, g, r, h), std::invalid_argument);
}

TEST_CASE("multiplier on the torus minimiser")
{
    const auto& t = torus(256);
    const auto est = lagrange_multiplier_estimate(t.chart, t.grid, t.result, 3 * cell(t));
    CHECK(est.Lambda > 0.0);
    CHECK(est.dispersion < 0.15);
    CHECK(est.Lambda == Approx(oracle::disk_boundary_slope2(0.5)).epsilon(0.15));
}

TEST_CASE("half-plane model field")
{
    const auto chart = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(chart, 256, 256);
    const auto ops = assemble_operators(chart, g);
    const double Lambda = 72.0;
    const double xf = g.coord(0, 128) + 0.5 * g.h(0);
    Field u(g.size());
    Indicator s(g.size(), 0);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double x = g.node(p)[0];
        u[p] = x > xf ? std::sqrt(Lambda) * (x - xf) : 0.0;
        s[p] = x > xf;
    }
    const Point x0(xf, pi);
    const auto radii = profile_radii(chart, g, x0, 10, 0.5);
    const auto wp = weiss_profile(chart, g, ops, u, x0, radii, Lambda);
    for (double phi : wp.phi)
        CHECK(phi == Approx(Lambda * pi / 2).epsilon(0.03));
    CHECK(wp.C * radii.back() * radii.back() / 2 <= 0.03 * Lambda * pi / 2);
    CHECK(wp.monotone);

    const auto dr = density_profile(chart, g, s, x0, radii);
    for (std::size_t i = 0; i < radii.size(); ++i)
        CHECK(std::abs(dr.theta[i] - 0.5) <= g.h(0) / radii[i]);
    CHECK(density_formula_check(wp, dr) <= 0.03);
}

TEST_CASE("density inside the support")
{
    const auto chart = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(chart, 128, 128);
    const Point c = g.node(g.index(64, 64));
    const auto s = geodesic_ball(chart, g, c, 1.5);
    const auto dr = density_profile(chart, g, s, c, {0.2, 0.5, 1.0});
    for (double th : dr.theta)
        CHECK(th == Approx(1.0));
    CHECK_FALSE(dr.all_within);
}

TEST_CASE("Weiss and density suites on the torus minimiser")
{
    const auto& t = torus(256);
    const auto est = lagrange_multiplier_estimate(t.chart, t.grid, t.result, 3 * cell(t));
    const auto pts = boundary_points(t.chart, t.grid, t.result.support, t.result.u, 24);
    REQUIRE(pts.size() >= 20);
    double lambda_density = 0.0;
    for (const auto& x0 : pts) {
        const auto radii = profile_radii(t.chart, t.grid, x0, 10);
        CHECK(radii.front() == Approx(3 * cell(t)));
        const auto wp = weiss_profile(t.chart, t.grid, t.ops, t.result.u, x0, radii, est.Lambda);
        const auto dr = density_profile(t.chart, t.grid, t.result.support, x0, radii);
        CHECK(wp.monotone);
        CHECK(std::isfinite(wp.C));
        CHECK(wp.C >= 0.0);
        CHECK(wp.phi0 / (est.Lambda * pi) == Approx(0.5).epsilon(0.2));
        CHECK(dr.all_within);
        CHECK(dr.theta0 >= 0.45);
        CHECK(density_formula_check(wp, dr) <= 0.1);
        lambda_density += density_multiplier(wp, dr) / pts.size();
    }
    CHECK(lambda_density == Approx(est.Lambda).epsilon(0.15));
}

TEST_CASE("nondegeneracy and growth")
{
    const auto& t = torus(256);
    const auto pts = boundary_points(t.chart, t.grid, t.result.support, t.result.u, 24);
    const double h = cell(t);
    const double R = std::sqrt(0.5 / pi);
    std::vector<double> rr;
    for (int k = 0; k < 6; ++k)
        rr.push_back(3 * h * std::pow(0.5 * R / (3 * h), k / 5.0));
    const auto nd = nondegeneracy_check(t.chart, t.grid, t.result, pts, rr);
    CHECK(nd.c_emp > 0.0);
    const auto gr = growth_bound_check(t.chart, t.grid, t.result, pts, rr);
    CHECK(std::isfinite(gr.C_emp));
    CHECK(gr.samples > 0);

    SUBCASE("interior control")
    {
        const Point c = t.grid.node(support_barycenter(t.chart, t.grid, t.result.support));
        CHECK(sphere_average(t.chart, t.grid, t.result.u, c, rr[0]) / rr[0] > 2 * gr.C_emp);
    }
    SUBCASE("refinement 128 -> 256")
    {
        const auto& c = torus(128);
        const double hc = cell(c);
        std::vector<double> rc;
        for (int k = 0; k < 6; ++k)
            rc.push_back(3 * hc * std::pow(0.5 * R / (3 * hc), k / 5.0));
        const auto pc = boundary_points(c.chart, c.grid, c.result.support, c.result.u, 24);
        const auto gc = growth_bound_check(c.chart, c.grid, c.result, pc, rc);
        CHECK(gc.C_emp == Approx(gr.C_emp).epsilon(0.2));
    }
    SUBCASE("zero field")
    {
        ShapeResult z = t.result;
        z.u.setZero();
        CHECK(growth_bound_check(t.chart, t.grid, z, pts, rr).C_emp == 0.0);
    }
}

TEST_CASE("nondegeneracy constant scales like sqrt(Lambda)")
{
    const double c = 2.0;
    const Solved a(builtin_flat_torus(2 * pi, 2 * pi), 128, 0.5);
    const Solved b(builtin_flat_torus(2 * pi, 2 * pi).scaled(c), 128, 0.5 * c * c);
    auto run = [](const Solved& s, double& c_emp, double& lam) {
        const double h = physical_spacing(s.chart, s.grid, Point(pi, pi));
        const auto est = lagrange_multiplier_estimate(s.chart, s.grid, s.result, 3 * h);
        const auto pts = boundary_points(s.chart, s.grid, s.result.support, s.result.u, 24);
        const double R = std::sqrt(s.result.m / pi);
        std::vector<double> rr;
        for (int k = 0; k < 6; ++k)
            rr.push_back(3 * h * std::pow(0.5 * R / (3 * h), k / 5.0));
        c_emp = nondegeneracy_check(s.chart, s.grid, s.result, pts, rr).c_emp;
        lam = est.Lambda;
    };
    double ca, la, cb, lb;
    run(a, ca, la);
    run(b, cb, lb);
    CHECK(ca / cb == Approx(std::sqrt(la / lb)).epsilon(0.1));
}

TEST_CASE("perimeter")
{
    const auto chart = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(chart, 256, 256);
    const auto ball = geodesic_ball(chart, g, g.node(g.index(128, 128)), 0.5);
    CHECK(perimeter_estimate(chart, g, ball) == Approx(pi).epsilon(0.1));

    const auto sph = builtin_sphere(1.0);
    const Grid gs(sph, 128, 256);
    Indicator north(gs.size(), 0);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 256; ++j)
            north[gs.index(i, j)] = 1;
    CHECK(perimeter_estimate(sph, gs, north) == Approx(2 * pi).epsilon(0.1));

    const double p256 = perimeter_estimate(torus(256).chart, torus(256).grid, torus(256).result.support);
    const double p128 = perimeter_estimate(torus(128).chart, torus(128).grid, torus(128).result.support);
    CHECK(p128 == Approx(p256).epsilon(0.05));
}

TEST_CASE("profile radii")
{
    const auto chart = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(chart, 128, 128);
    const auto r = profile_radii(chart, g, Point(1.0, 1.0), 5);
    REQUIRE(r.size() == 5);
    CHECK(r.front() == Approx(3 * g.h(0)));
    CHECK(r.back() == Approx(0.25 * chart.injectivity_scale()));
    for (std::size_t i = 1; i < r.size(); ++i)
        CHECK(r[i] > r[i - 1]);
    CHECK_THROWS_AS(profile_radii(chart, g, Point(1.0, 1.0), 5, g.h(0)), std::invalid_argument);
}

TEST_CASE("report export")
{
    WeissProfile w;
    w.x0 = Point(1.5, 2.5);
    w.radii = {0.1, 0.2};
    w.phi = {3.0, 4.0};
    w.Lambda = 7.0;
    DensityReport d;
    d.x0 = w.x0;
    d.radii = w.radii;
    d.theta = {0.5, 0.45};
    std::ostringstream os;
    write_diagnostics_csv(os, {w}, {d});
    CHECK(os.str() == "x0,r,phi,theta,Lambda\n1.5;2.5,0.1,3,0.5,7\n1.5;2.5,0.2,4,0.45,7\n");
    d.radii = {0.1, 0.3};
    std::ostringstream bad;
    CHECK_THROWS_AS(write_diagnostics_csv(bad, {w}, {d}), std::invalid_argument);
    CHECK(to_json(w)["phi"].size() == 2);
    CHECK(to_json(d)["theta"][1] == 0.45);
}
