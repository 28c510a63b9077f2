#pragma once

#include <functional>

#include "fk/discretize.hpp"

namespace fk {

/// Warped product dt^2 + f(t)^2 dtheta^2 (surface of revolution in
/// arc-length parametrisation of the meridian).
struct RevolutionProfile {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> ddf;
};

/// f = sqrt(t^2 + neck^2), the catenoid.
RevolutionProfile catenoid_profile(double neck);
/// f = 1, a flat cylinder.
RevolutionProfile cylinder_profile();

struct PolarOptions {
    int n_rho = 256;  // radial elements
    int n_psi = 64;   // angular elements
    int substeps = 2; // RK4 steps between radial quadrature points
    double eig_tol = 1e-13;
    int max_iter = 200;
};

struct PolarBall {
    double t0 = 0.0;
    double radius = 0.0;
    double volume = 0.0;
    double lambda = 0.0;
    int dofs = 0;
    int iterations = 0;
};

/// Area of the geodesic ball of radius r about a point at height t0,
/// integrated in geodesic polar coordinates.
double polar_ball_volume(const RevolutionProfile& prof, double t0, double r,
                         const PolarOptions& opts = {});

/// Radius whose ball has area m, by bisection to machine precision.
double polar_ball_radius(const RevolutionProfile& prof, double t0, double m,
                         const PolarOptions& opts = {});

/// Dirichlet lambda_1 of the geodesic ball with Q1 elements on the geodesic
/// polar grid (rho, psi). The metric d rho^2 + J^2 d psi^2 comes from
/// RK4 integration of the geodesic and Jacobi equations. Conforming, so the
/// result bounds the exact eigenvalue from above up to quadrature error.
PolarBall polar_ball_eigenvalue(const RevolutionProfile& prof, double t0, double r,
                                const PolarOptions& opts = {});

} // namespace fk
