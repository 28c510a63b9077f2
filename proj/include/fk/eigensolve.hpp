#pragma once

#include <cstdint>
#include <stdexcept>

#include "fk/discretize.hpp"

namespace fk {

enum class InnerSolver { cg, ldlt };

struct EigenOptions {
    double tol = 1e-6;
    int max_iter = 500;
    std::uint64_t seed = 1;
    InnerSolver inner = InnerSolver::ldlt;
};

/// Ground state of K u = lambda M u on a support, extended by zero.
struct SpectralPair {
    double lambda = 0.0;
    Field u;               // global, sum M u^2 = 1, max-magnitude node positive
    double residual = 0.0; // |A y - lambda y| for the scaled form A = M^-1/2 K M^-1/2
    int iterations = 0;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual)
    {
    }
    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

/// Inverse power iteration on the diagonally scaled pencil. The inner solve
/// is a sparse LDLT factorisation, or Jacobi-preconditioned CG. Stops once the relative eigenvalue
/// change and the residual (relative to lambda) are both below tol.
/// A support without any Dirichlet face (a whole closed manifold) returns the
/// constant mode with lambda = 0.
SpectralPair smallest_eigenpair(const DiscreteOperatorPair& ops, const Indicator& support,
                                const EigenOptions& opts = {});
SpectralPair smallest_eigenpair(const RestrictedOperators& r, const EigenOptions& opts = {});

/// Discrete Rayleigh quotient of v on its own support {v != 0}.
double rayleigh_quotient(const DiscreteOperatorPair& ops, const Field& v);

} // namespace fk
