#include "fk/eigensolve.hpp"

#include <cmath>
#include <random>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace fk {

namespace {

SpectralPair constant_mode(const RestrictedOperators& r)
{
    SpectralPair out;
    const double mass = r.M.sum();
    out.u = r.extend(Field::Constant(r.dim(), 1.0 / std::sqrt(mass)));
    return out;
}

} // namespace

SpectralPair smallest_eigenpair(const RestrictedOperators& r, const EigenOptions& opts)
{
    if (!(opts.tol > 0.0))
        throw std::invalid_argument("eigensolver tolerance must be positive");
    if (r.dim() == 0)
        throw std::invalid_argument("empty support");
    if (!r.has_boundary)
        return constant_mode(r);

    const Eigen::Index n = static_cast<Eigen::Index>(r.dim());
    const Field dinv = r.M.cwiseSqrt().cwiseInverse();
    SparseMatrix A = dinv.asDiagonal() * r.K * dinv.asDiagonal();
    A.makeCompressed();

    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    const double inner_tol = 1e-3 * opts.tol;
    if (opts.inner == InnerSolver::cg) {
        cg.setTolerance(inner_tol);
        cg.setMaxIterations(std::max<Eigen::Index>(1000, 4 * n));
        cg.compute(A);
    } else {
        ldlt.compute(A);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("LDLT factorisation failed");
    }

    // seeded positive start, in local (increasing global index) order
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Field y(n);
    for (Eigen::Index k = 0; k < n; ++k)
        y[k] = unif(rng);
    y.normalize();

    double lambda = y.dot(A * y);
    double best_res = std::numeric_limits<double>::infinity();
    Field z;
    for (int it = 1; it <= opts.max_iter; ++it) {
        if (opts.inner == InnerSolver::cg) {
            z = cg.solveWithGuess(y, y / lambda);
            if (cg.info() != Eigen::Success && cg.error() > 1e3 * inner_tol)
                throw ConvergenceError("inner CG solve stalled at relative error " +
                                           std::to_string(cg.error()),
                                       best_res);
        } else {
            z = ldlt.solve(y);
        }
        y = z.normalized();
        const Field Ay = A * y;
        const double next = y.dot(Ay);
        const double res = (Ay - next * y).norm();
        best_res = std::min(best_res, res);
        const double change = std::abs(next - lambda) / std::abs(next);
        lambda = next;
        if (change < opts.tol && res < opts.tol * lambda) {
            Field u = dinv.cwiseProduct(y);
            Eigen::Index imax;
            u.cwiseAbs().maxCoeff(&imax);
            if (u[imax] < 0.0)
                u = -u;
            // lumped mass makes sum M u^2 equal |y|^2 = 1
            u /= std::sqrt(r.M.dot(u.cwiseProduct(u)));
            SpectralPair out;
            out.lambda = lambda;
            out.u = r.extend(u);
            out.residual = res;
            out.iterations = it;
            return out;
        }
    }
    throw ConvergenceError("inverse iteration did not converge in " +
                               std::to_string(opts.max_iter) + " iterations (best residual " +
                               std::to_string(best_res) + ")",
                           best_res);
}

SpectralPair smallest_eigenpair(const DiscreteOperatorPair& ops, const Indicator& support,
                                const EigenOptions& opts)
{
    return smallest_eigenpair(restrict_to_support(ops, support), opts);
}

double rayleigh_quotient(const DiscreteOperatorPair& ops, const Field& v)
{
    const double den = mass_norm2(ops, v);
    if (!(den > 0.0))
        throw std::invalid_argument("Rayleigh quotient of the zero field");
    return dirichlet_energy(ops, v) / den;
}

} // namespace fk
