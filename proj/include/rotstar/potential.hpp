#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>

#include "rotstar/grid.hpp"
#include "rotstar/kernels.hpp"

namespace rotstar {

using SourceFn = std::function<double(double r, double zeta)>;

/// Azimuthal integral of 1/|x - x'| by adaptive Gauss-Kronrod quadrature.
/// Throws SingularPoint when the two points coincide.
double kernel_eval(double r, double zeta, double rp, double zetap);

/// Even Legendre coefficients f_l(r_i), l <= L_max.
ModeField legendre_coeffs(const AxiField& field);

/// Mode coefficients of a nodal field projected at the rule points, n_q x n_modes.
Eigen::MatrixXd rule_modes(const AxiField& field);
/// Same for a callable source evaluated at (s_q, zeta_j).
Eigen::MatrixXd rule_modes(const GridPtr& grid, const SourceFn& source);

/// Multipole potential at the radial nodes from source modes at the rule points.
ModeField apply_K_rule(const GridPtr& grid, const Eigen::MatrixXd& src_rule);
/// Multipole potential modes at arbitrary radii, n_targets x n_modes.
Eigen::MatrixXd apply_K_at(const GridPtr& grid, const Eigen::MatrixXd& src_rule,
                           std::span<const double> radii);

/// K f with f interpolated from the nodes to the rule points.
AxiField apply_K_multipole(const AxiField& field);
AxiField apply_K_multipole(const GridPtr& grid, const SourceFn& source);

struct DirectOptions {
    int gauss = 8;
    int theta_panels = 8;
    double min_panel = 1e-5;
    std::vector<double> r_breaks;  ///< defaults to the grid's radial nodes
};

/// K f by adaptive panel quadrature of the ring kernel over the meridional half plane.
AxiField apply_K_direct(const AxiField& field, const DirectOptions& opt = {});
AxiField apply_K_direct(const GridPtr& grid, const SourceFn& source, const DirectOptions& opt = {});

/// Nodal field as a function of (r, zeta): cubic in r, full-degree polynomial in zeta.
SourceFn nodal_interpolant(const AxiField& field);

/// Largest one-sided radial slope at the origin over the polar nodes, from a
/// cubic least-squares fit on the first six radial nodes.
double grad_at_origin(const AxiField& field_K);

/// sup over nodes in [r_lo, r_hi] and over modes of |L_l (K f)_l - f_l|, where
/// L_l y = -r^-2 (r^2 y')' + l(l+1) r^-2 y is taken by three-point differences.
double laplacian_defect(const GridPtr& grid, const SourceFn& source, double r_lo, double r_hi);

}  // namespace rotstar
