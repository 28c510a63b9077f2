#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "fk/geodesic.hpp"
#include "fk/grid.hpp"

namespace fk {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Two-point flux between axis neighbours p and q with coefficient c.
struct AxisEdge {
    std::size_t p;
    std::size_t q;
    double c;
};

/// Discrete -div(sqrt|g| g^{-1} grad .) and lumped mass on a grid.
///
/// K is assembled as a sum of edge Laplacians c_e (e_p - e_q)(e_p - e_q)^T:
/// axis faces carry sqrt|g| g^ii at the face midpoint, non-diagonal metrics add
/// signed diagonal edges from the cross coefficient at each quad centre.
/// Dirichlet truncation faces sit half a cell beyond the last node row and
/// enter the diagonal with the reflected-ghost weight 2c. Pole faces carry no
/// flux.
struct DiscreteOperatorPair {
    SparseMatrix K;
    Field M;
    std::vector<AxisEdge> axis_edges;
};

DiscreteOperatorPair assemble_operators(const MetricChart& chart, const Grid& grid);

/// Operators on the degrees of freedom of a support.
///
/// The complement is removed; the Dirichlet condition is placed on the cell
/// faces separating the support from removed nodes (reflected ghost), so the
/// discrete domain is exactly the union of support cells.
struct RestrictedOperators {
    SparseMatrix K;
    Field M;
    std::vector<std::size_t> nodes;   // local -> global
    std::vector<std::ptrdiff_t> local; // global -> local, -1 off support
    bool has_boundary = false;         // any Dirichlet face present

    std::size_t dim() const { return nodes.size(); }
    Field extend(const Field& local_values) const;
    Field restrict_field(const Field& global_values) const;
};

RestrictedOperators restrict_to_support(const DiscreteOperatorPair& ops, const Indicator& support);

/// Discrete Dirichlet energy of w on its own support {w != 0}; equals
/// w^T K_S w for the restricted stiffness K_S.
double dirichlet_energy(const DiscreteOperatorPair& ops, const Field& w);

/// sum M_p w_p^2
double mass_norm2(const DiscreteOperatorPair& ops, const Field& w);

/// sqrt(d_i u g^ij d_j u) by centred differences, one-sided at non-periodic edges.
Field gradient_norm_field(const MetricChart& chart, const Grid& grid, const Field& u);

/// sum f sqrt|g| h0 h1
double integrate(const MetricChart& chart, const Grid& grid, const Field& f);

/// Physical width of a grid cell at x (largest axis).
double physical_spacing(const MetricChart& chart, const Grid& grid, const Point& x);

/// Tent weight (1 - |d - r| / w)^+ : annulus proxy of the sphere of radius r.
inline double shell_weight(double d, double r, double w)
{
    const double s = 1.0 - std::abs(d - r) / w;
    return s > 0.0 ? s : 0.0;
}

/// Smoothed indicator of {d <= r}: the running integral of the shell tent.
double ball_weight(double d, double r, double w);

/// Mean of u over the sphere of radius r about x0, using a tent-weighted
/// annulus of half-width one cell. Requires r >= 2 cells.
double sphere_average(const MetricChart& chart, const Grid& grid, const Field& u, const Point& x0,
                      double r);
/// Same, reusing a precomputed distance field.
double sphere_average(const Grid& grid, const Field& cell_vol, const Field& u,
                      const Field& distance, double r, double width);

/// CSV with columns i,j,x1,x2,value.
void write_field_csv(std::ostream& os, const Grid& grid, const Field& f);
void write_field_csv(const std::string& path, const Grid& grid, const Field& f);

Field indicator_field(const Indicator& s);

} // namespace fk
