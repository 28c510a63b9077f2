#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fk/eigensolve.hpp"

using namespace fk;
using doctest::Approx;

constexpr double pi = std::numbers::pi;

namespace {

// a x a square of support cells with its corner at node (0,0)
Indicator square(const Grid& g, int cells)
{
    Indicator s(g.size(), 0);
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j)
            s[g.index(i, j)] = 1;
    return s;
}

} // namespace

TEST_CASE("square support converges at second order")
{
    const double a = pi / 2;
    const double exact = 2 * pi * pi / (a * a);
    const auto torus = builtin_flat_torus(2 * pi, 2 * pi);
    double err[3];
    int k = 0;
    for (int n : {64, 128, 256}) {
        const Grid g(torus, n, n);
        const auto ops = assemble_operators(torus, g);
        EigenOptions o;
        o.tol = 1e-10;
        const auto sp = smallest_eigenpair(ops, square(g, n / 4), o);
        // the five-point value with the boundary on the cell faces
        const double h = g.h(0);
        const double fd = 2 * 4 / (h * h) * std::pow(std::sin(pi * h / (2 * a)), 2);
        CHECK(sp.lambda == Approx(fd).epsilon(1e-9));
        err[k++] = std::abs(sp.lambda - exact);
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.8);
    CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("eigenvalue scales as 1/c^2 with the metric")
{
    const auto cat = builtin_catenoid(1.0, 3.0);
    const Grid g(cat, 64, 64);
    Indicator s(g.size(), 0);
    for (int i = 10; i < 30; ++i)
        for (int j = 20; j < 44; ++j)
            s[g.index(i, j)] = 1;
    EigenOptions o;
    o.tol = 1e-11;
    const double l1 = smallest_eigenpair(assemble_operators(cat, g), s, o).lambda;
    for (double c : {0.5, 3.0}) {
        const double lc = smallest_eigenpair(assemble_operators(cat.scaled(c), g), s, o).lambda;
        CHECK(std::abs(lc * c * c - l1) <= 1e-8 * l1);
    }
}

TEST_CASE("eigenpair normalisation and consistency")
{
    const auto torus = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(torus, 64, 64);
    const auto ops = assemble_operators(torus, g);
    const auto s = square(g, 20);
    const auto sp = smallest_eigenpair(ops, s);
    CHECK(mass_norm2(ops, sp.u) == Approx(1.0));
    CHECK(sp.u.maxCoeff() > 0.0);
    CHECK(sp.u.minCoeff() >= -1e-12);
    for (std::size_t p = 0; p < g.size(); ++p)
        if (!s[p])
            REQUIRE(sp.u[p] == 0.0);
    CHECK(rayleigh_quotient(ops, sp.u) == Approx(sp.lambda).epsilon(1e-6));
    CHECK(sp.residual <= 1e-6 * sp.lambda);

    EigenOptions cg;
    cg.inner = InnerSolver::cg;
    cg.tol = 1e-8;
    CHECK(smallest_eigenpair(ops, s, cg).lambda == Approx(sp.lambda).epsilon(1e-6));
}

TEST_CASE("closed manifold has the constant ground state")
{
    const auto torus = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(torus, 16, 16);
    const auto ops = assemble_operators(torus, g);
    const auto sp = smallest_eigenpair(ops, Indicator(g.size(), 1));
    CHECK(sp.lambda == 0.0);
    CHECK(sp.u.maxCoeff() == Approx(sp.u.minCoeff()));
}

TEST_CASE("eigensolver errors")
{
    const auto torus = builtin_flat_torus(2 * pi, 2 * pi);
    const Grid g(torus, 32, 32);
    const auto ops = assemble_operators(torus, g);
    CHECK_THROWS_AS(smallest_eigenpair(ops, Indicator(g.size(), 0)), std::invalid_argument);
    EigenOptions o;
    o.max_iter = 1;
    o.tol = 1e-14;
    CHECK_THROWS_AS(smallest_eigenpair(ops, square(g, 10), o), ConvergenceError);
    o.tol = -1.0;
    CHECK_THROWS_AS(smallest_eigenpair(ops, square(g, 10), o), std::invalid_argument);
}

TEST_CASE("hemisphere cap on the sphere")
{
    // u = cos(theta) on the northern hemisphere, lambda = 2
    const auto sph = builtin_sphere(1.0);
    const Grid g(sph, 128, 256);
    const auto ops = assemble_operators(sph, g);
    Indicator s(g.size(), 0);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 256; ++j)
            s[g.index(i, j)] = 1;
    CHECK(smallest_eigenpair(ops, s).lambda == Approx(2.0).epsilon(0.01));
}
