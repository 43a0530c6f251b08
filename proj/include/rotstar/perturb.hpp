#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rotstar/equilibrium.hpp"
#include "rotstar/radial.hpp"

namespace rotstar {

/// Solution of the degree-j mode equation
///   [-r^-2 (r^2 y')' + j(j+1)/r^2] y = q y + source,  q = f'(theta),
/// with y = O(r^j) at 0 and r^-j (r y' + (j+1) y) -> A at infinity.
struct ModeSolution {
    int j = 0;
    double A_coef = 0.0;
    std::vector<double> r;    ///< profile nodes
    std::vector<double> h;    ///< h_j at r
    std::vector<double> H;    ///< h_j / psi on (0, xi1], 0 at the origin
    double exterior_b = 0.0;  ///< h = A r^j/(2j+1) + b r^-(j+1) past xi1
    double lipschitz = 0.0;   ///< psi-weighted sup norm of the iteration map
    int iterations = 0;

    double at(double r) const;
};

struct ModeOptions {
    double damping = -1.0;  ///< < 0 picks 0.5 for j <= 2 and 1 otherwise
    int max_iter = 5000;
    double tol = 1e-14;
    std::vector<double> init;  ///< initial iterate at the nodes inside xi1
};

/// Fixed-point iteration on the integral representation. `source` must vanish past xi1.
ModeSolution solve_mode(const RadialProfile& profile, int j, double A_coef,
                        const std::function<double(double)>& source = {},
                        const ModeOptions& opt = {});

/// Shooting solution of the same problem (no source): the ODE for theta and y
/// is integrated from a series start and scaled to the far-field condition.
ModeSolution shoot_mode(const RadialProfile& profile, int j, double A_coef);

/// h0 from h0'' + 2 h0'/r + q h0 = 1, h0(0) = 0, continued by r^2/6 + c1 + c2/r.
struct H0Solution {
    std::vector<double> r, h;
    double c1 = 0.0, c2 = 0.0;
    double at(double r) const;
};
H0Solution solve_h0(const RadialProfile& profile);

/// First-order response h = (I - D G(theta))^-1 g1 to g1 = r^2 (1 - zeta^2) / 4.
struct HField {
    H0Solution h0;
    ModeSolution h2;
    ModeField discrete;       ///< same quantity from the discretized resolvent
    double dual_difference = 0.0;  ///< sup |h0|, |h2| mismatch between the two paths
    double high_modes_sup = 0.0;   ///< sup of the discrete modes j >= 4

    double at(double r, double zeta) const;
};

/// `grid` must use the profile nodes; a default grid is built when null.
HField compute_h_field(const RadialProfile& profile, const EquationOfState& eos, double u_O,
                       GridPtr grid = nullptr);

struct OblatenessReport {
    double nu = 0.0, xi1 = 0.0, mu1 = 0.0;
    double beta = 0.0;
    double h0_at_xi1 = 0.0, h2_at_xi1 = 0.0;
    std::vector<double> zeta, Xi1;
    double sigma_slope = 0.0;  ///< -(3/2)(xi1/mu1) h2(xi1)
    double sigma_linear = 0.0; ///< sigma_slope * beta
    std::optional<double> sigma_measured;
    std::string warning;
};

OblatenessReport oblateness(const RadialProfile& profile, const HField& h, double beta,
                            std::span<const double> zeta);

/// (R(0) - R(1)) / xi1 of a solved configuration.
double measured_oblateness(const EquilibriumSolution& sol, double xi1);

/// g1 = r^2 (1 - zeta^2) / 4 on a grid.
AxiField g1_field(const GridPtr& grid);

/// sigma / beta = s0 + c beta^q fitted through measured oblateness values, and
/// the exponent of sigma - slope * beta in a log-log least-squares fit.
struct OblatenessFit {
    double slope_extrapolated = 0.0;  ///< s0
    double q = 0.0;
    double error_exponent = 0.0;
    double relative_difference = 0.0;  ///< |s0 / slope - 1|
};
OblatenessFit fit_oblateness(std::span<const double> beta, std::span<const double> sigma,
                             double slope);

}  // namespace rotstar
