#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rotstar/equilibrium.hpp"

namespace rotstar {

/// 2 pi sum_j w_j int_0^R(zeta_j) f(u) r^2 dr, with the surface interval
/// integrated in a variable that removes the (R - r)^nu behavior.
double total_mass_dimensionless(const ModeField& u, const EquationOfState& eos, double u_O);
double total_mass_dimensionless(const EquilibriumSolution& sol, const EquationOfState& eos,
                                double u_O);

/// Physical mass rho_O a^3 M1 (rho_O read as the density prefactor times u_O^nu).
double physical_mass(const EquationOfState& eos, const ScaleSet& scale, double M1);

/// (A gamma / (4 pi G (gamma - 1)))^(3/2).
double mass_prefactor(const EquationOfState& eos, double G_grav = 1.0);
/// (3 gamma - 4) / 2.
double mass_exponent(const EquationOfState& eos);

struct MassPoint {
    double rho_O = 0.0;
    double Omega2 = 0.0;
    double beta = 0.0;
    double M1 = 0.0;
    double M = 0.0;
    double dM_drho = 0.0;  ///< filled by dM_drho_at_constant_omega when requested
};

/// Grid and solver settings for mass evaluations.
struct MassOptions {
    int n_r = 256;
    int n_zeta = 32;
    int l_max = 8;
    SolverOptions solver{};
    double G_grav = 1.0;
    int jobs = 1;  ///< threads for independent curve points
};

/// One full solve at central density rho_O and angular velocity squared Omega2.
/// `warm` is used as the initial iterate when it matches the grid.
MassPoint mass_point(const EquationOfState& eos, double rho_O, double Omega2,
                     const MassOptions& opt = {}, AxiField* warm = nullptr);

/// prefactor rho_O^(e-1) (e M1 - beta dM1/dbeta).
double dM_drho_at_constant_omega(const MassPoint& point, const EquationOfState& eos,
                                 double dM1_dbeta, double G_grav = 1.0);

/// Centered difference of M1 in beta with the given step (forward at beta < step).
double dM1_dbeta(const EquationOfState& eos, double u_O, double beta, double step = 1e-4,
                 const MassOptions& opt = {});

struct DensityRoot {
    double rho_O = 0.0;
    MassPoint point;
    int evaluations = 0;
};

/// Root of M(rho_O, Omega2) = M_target in log rho_O over the bracket.
/// Throws GammaFourThirds for gamma = 4/3 and NoBracket without a sign change.
DensityRoot central_density_from_mass(double M_target, double Omega2, const EquationOfState& eos,
                                      std::array<double, 2> bracket, const MassOptions& opt = {},
                                      double rel_tol = 1e-9);

/// Closed-form inversion at Omega = 0 for the polytrope.
double central_density_spherical(double M_target, const EquationOfState& eos, double M1_0,
                                 double G_grav = 1.0);

struct MassCurve {
    double M_target = 0.0;
    std::vector<MassPoint> points;
    std::vector<double> relative_error;
    std::optional<double> dM_drho_spherical;  ///< checked before tracing for non-polytropes
    double largest_monotone_beta = 0.0;
};

/// C(Omega2) for each value of the schedule, each point bracketed around rho_bar
/// and solved independently. `largest_monotone_beta` is the largest beta over the
/// leading run of the schedule on which C decreases.
MassCurve trace_mass_curve(double rho_bar, const std::vector<double>& Omega2_schedule,
                           const EquationOfState& eos, const MassOptions& opt = {},
                           double bracket_factor = 1.5);

}  // namespace rotstar
