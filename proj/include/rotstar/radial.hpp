#pragma once

#include <span>
#include <string>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"

namespace rotstar {

/// Regular spherical solution theta(r) of -r^-2 (r^2 theta')' = f(theta),
/// theta(0) = 1, continued harmonically past its first zero xi1.
struct RadialProfile {
    std::vector<double> r_nodes;
    std::vector<double> theta;
    std::vector<double> dtheta;
    std::vector<double> d2theta;
    std::vector<double> psi;  ///< -dtheta/dr
    double xi1 = 0.0;
    double mu1 = 0.0;
    double f1 = 1.0;          ///< f(1)
    EnthalpyLaw law;

    double r_inf() const { return r_nodes.back(); }
    /// Quintic Hermite interpolation; closed form past the last node.
    double theta_at(double r) const;
    double dtheta_at(double r) const;
    /// psi with its series near the origin.
    double psi_at(double r) const;
};

struct RadialOptions {
    int n_nodes = 256;
    ClusterOptions cluster{};
    double r_start = 1e-4;
    std::vector<double> nodes{};  ///< used as given when nonempty
};

/// Integrates from the series start with an adaptive Dormand-Prince scheme.
/// r_inf <= 0 selects 1.5 xi1.
RadialProfile solve_lane_emden(const EquationOfState& eos, double u_O, double r_inf,
                               double tol = 1e-13, const RadialOptions& opt = {});

/// -mu1 (1/xi1 - 1/r) for r >= xi1.
double harmonic_extension(const RadialProfile& profile, double r);

/// Sup of the (SE) residual at interior nodes, by nonuniform finite differences.
double lane_emden_residual(const RadialProfile& profile);

/// Columns r, theta, dtheta, psi.
std::string profile_csv(const RadialProfile& profile);

}  // namespace rotstar
