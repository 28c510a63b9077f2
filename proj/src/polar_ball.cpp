#include "fk/polar_ball.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace fk {

namespace {

constexpr double pi = std::numbers::pi;

// 3-point Gauss on [0,1]
const std::array<double, 3> kGr = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
const std::array<double, 3> kWr = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
// 2-point Gauss on [0,1]
const std::array<double, 2> kGp = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

struct State {
    double t, dt, dth, J, dJ;
};

State rhs(const RevolutionProfile& p, const State& s)
{
    const double f = p.f(s.t);
    const double df = p.df(s.t);
    return {s.dt, f * df * s.dth * s.dth, -2.0 * df / f * s.dt * s.dth, s.dJ,
            p.ddf(s.t) / f * s.J};
}

State axpy(const State& s, double a, const State& k)
{
    return {s.t + a * k.t, s.dt + a * k.dt, s.dth + a * k.dth, s.J + a * k.J, s.dJ + a * k.dJ};
}

void rk4(const RevolutionProfile& p, State& s, double len, int steps)
{
    const double h = len / steps;
    for (int i = 0; i < steps; ++i) {
        const State k1 = rhs(p, s);
        const State k2 = rhs(p, axpy(s, 0.5 * h, k1));
        const State k3 = rhs(p, axpy(s, 0.5 * h, k2));
        const State k4 = rhs(p, axpy(s, h, k3));
        s.t += h / 6 * (k1.t + 2 * k2.t + 2 * k3.t + k4.t);
        s.dt += h / 6 * (k1.dt + 2 * k2.dt + 2 * k3.dt + k4.dt);
        s.dth += h / 6 * (k1.dth + 2 * k2.dth + 2 * k3.dth + k4.dth);
        s.J += h / 6 * (k1.J + 2 * k2.J + 2 * k3.J + k4.J);
        s.dJ += h / 6 * (k1.dJ + 2 * k2.dJ + 2 * k3.dJ + k4.dJ);
    }
}

// J at the radial Gauss points of every element, for the two angular Gauss
// points of every angular element: J[(k * 2 + b) * n_rho * 3 + i * 3 + a]
std::vector<double> jacobi_samples(const RevolutionProfile& p, double t0, double r,
                                   const PolarOptions& o)
{
    if (!(r > 0.0))
        throw std::invalid_argument("polar ball radius must be positive");
    if (o.n_rho < 2 || o.n_psi < 3 || o.substeps < 1)
        throw std::invalid_argument("polar grid too coarse");
    const double drho = r / o.n_rho;
    const double dpsi = 2.0 * pi / o.n_psi;
    std::vector<double> J(static_cast<std::size_t>(o.n_psi) * 2 * o.n_rho * 3);
    const double f0 = p.f(t0);
    for (int k = 0; k < o.n_psi; ++k)
        for (int b = 0; b < 2; ++b) {
            const double psi = (k + kGp[b]) * dpsi;
            State s{t0, std::sin(psi), std::cos(psi) / f0, 0.0, 1.0};
            double* out = &J[(static_cast<std::size_t>(k) * 2 + b) * o.n_rho * 3];
            for (int i = 0; i < o.n_rho; ++i) {
                double at = 0.0;
                for (int a = 0; a < 3; ++a) {
                    rk4(p, s, (kGr[a] - at) * drho, o.substeps);
                    at = kGr[a];
                    out[i * 3 + a] = s.J;
                }
                rk4(p, s, (1.0 - at) * drho, o.substeps);
            }
        }
    return J;
}

} // namespace

RevolutionProfile catenoid_profile(double neck)
{
    if (!(neck > 0.0))
        throw std::invalid_argument("catenoid neck must be positive");
    const double n2 = neck * neck;
    return {[n2](double t) { return std::sqrt(t * t + n2); },
            [n2](double t) { return t / std::sqrt(t * t + n2); },
            [n2](double t) { return n2 / std::pow(t * t + n2, 1.5); }};
}

RevolutionProfile cylinder_profile()
{
    return {[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

double polar_ball_volume(const RevolutionProfile& prof, double t0, double r,
                         const PolarOptions& opts)
{
    const auto J = jacobi_samples(prof, t0, r, opts);
    const double cell = r / opts.n_rho * 2.0 * pi / opts.n_psi;
    double v = 0.0;
    for (std::size_t q = 0; q < J.size(); ++q)
        v += 0.5 * kWr[q % 3] * J[q];
    return v * cell;
}

double polar_ball_radius(const RevolutionProfile& prof, double t0, double m,
                         const PolarOptions& opts)
{
    if (!(m > 0.0))
        throw std::invalid_argument("ball volume must be positive");
    double lo = 0.0, hi = std::sqrt(m / pi);
    while (polar_ball_volume(prof, t0, hi, opts) < m)
        hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
         ++it) {
        const double mid = 0.5 * (lo + hi);
        (polar_ball_volume(prof, t0, mid, opts) < m ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

PolarBall polar_ball_eigenvalue(const RevolutionProfile& prof, double t0, double r,
                                const PolarOptions& o)
{
    const auto J = jacobi_samples(prof, t0, r, o);
    const int nr = o.n_rho, np = o.n_psi;
    const double drho = r / nr;
    const double dpsi = 2.0 * pi / np;
    const int ndof = 1 + (nr - 1) * np;
    auto dof = [&](int i, int k) { return i == 0 ? 0 : i == nr ? -1 : 1 + (i - 1) * np + k % np; };

    std::vector<Eigen::Triplet<double>> kt, mt;
    double volume = 0.0;
    for (int i = 0; i < nr; ++i)
        for (int k = 0; k < np; ++k) {
            const int nodes[4] = {dof(i, k), dof(i + 1, k), dof(i, k + 1), dof(i + 1, k + 1)};
            double Ke[4][4] = {}, Me[4][4] = {};
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 3; ++a) {
                    const double s = kGr[a], q = kGp[b];
                    const double jac = J[(static_cast<std::size_t>(k) * 2 + b) * nr * 3 + i * 3 + a];
                    const double w = kWr[a] * 0.5 * drho * dpsi;
                    volume += w * jac;
                    const double N[4] = {(1 - s) * (1 - q), s * (1 - q), (1 - s) * q, s * q};
                    const double Nr[4] = {-(1 - q) / drho, (1 - q) / drho, -q / drho, q / drho};
                    const double Np[4] = {-(1 - s) / dpsi, -s / dpsi, (1 - s) / dpsi, s / dpsi};
                    for (int x = 0; x < 4; ++x)
                        for (int y = 0; y < 4; ++y) {
                            Ke[x][y] += w * (Nr[x] * Nr[y] * jac + Np[x] * Np[y] / jac);
                            Me[x][y] += w * N[x] * N[y] * jac;
                        }
                }
            for (int x = 0; x < 4; ++x)
                for (int y = 0; y < 4; ++y)
                    if (nodes[x] >= 0 && nodes[y] >= 0) {
                        kt.emplace_back(nodes[x], nodes[y], Ke[x][y]);
                        mt.emplace_back(nodes[x], nodes[y], Me[x][y]);
                    }
        }
    SparseMatrix K(ndof, ndof), M(ndof, ndof);
    K.setFromTriplets(kt.begin(), kt.end());
    M.setFromTriplets(mt.begin(), mt.end());

    Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("polar ball: factorisation failed");
    Eigen::VectorXd x = Eigen::VectorXd::Ones(ndof);
    double lambda = 0.0;
    PolarBall out;
    for (int it = 1; it <= o.max_iter; ++it) {
        x = ldlt.solve(M * x);
        x /= std::sqrt(x.dot(M * x));
        const double next = x.dot(K * x);
        out.iterations = it;
        const bool done = std::abs(next - lambda) <= o.eig_tol * next;
        lambda = next;
        if (done)
            break;
    }
    out.t0 = t0;
    out.radius = r;
    out.volume = volume;
    out.lambda = lambda;
    out.dofs = ndof;
    return out;
}

} // namespace fk
