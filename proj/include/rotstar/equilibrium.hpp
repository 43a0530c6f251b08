#pragma once

#include <optional>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"
#include "rotstar/radial.hpp"
#include "rotstar/rotation.hpp"

namespace rotstar {

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 50;
    bool newton = true;
    double damping = 0.5;        ///< Picard relaxation
    double hl_threshold = 1e-3;
    bool compute_hl = true;      ///< run the HL certificate after convergence
    bool check_hl = true;        ///< throw SingularLinearization below the threshold
    double r0_fraction = 0.05;   ///< r0 = r0_fraction * xi1 (or * r_inf/1.5 without a profile)
    double r0 = 0.0;             ///< used when positive
};

struct AdmissibilityFlags {
    bool a1 = false;
    bool a2 = false;
    bool monotone = false;
    double r0 = 0.0;
    double inv_C = 0.0;       ///< largest 1/C with du/dr <= -r/C at every node
    double inv_C_axis = 0.0;  ///< near-axis slope -du/dr / r
    std::vector<double> R;    ///< R(zeta_j) when a2 holds
};

struct HLReport {
    double sigma_min = 0.0;
    bool block_diagonal = false;
    std::vector<double> block_sigma;  ///< per mode when block diagonal
};

struct EquilibriumSolution {
    ModeField modes;
    AxiField u;
    std::vector<double> R_of_zeta;
    std::vector<double> residual_history;
    AdmissibilityFlags flags;
    HLReport hl;
    double boundary_grad_min = 0.0;
    int iterations = 0;
    double beta = 0.0;  ///< rotation parameter when known
};

/// G(u) = 1 + K(f(u)) - K(f(u))(0, 0), f evaluated at the radial rule points.
ModeField apply_G(const ModeField& u, const EquationOfState& eos, double u_O);
AxiField apply_G(const AxiField& u, const EquationOfState& eos, double u_O);

/// K(f'(u) h) - K(f'(u) h)(0, 0).
ModeField frechet_G_apply(const ModeField& u, const ModeField& h, const EquationOfState& eos,
                          double u_O);
AxiField frechet_G_apply(const AxiField& u, const AxiField& h, const EquationOfState& eos,
                         double u_O);

/// Dense D G(u) in mode-major flat coordinates.
RowMatrix frechet_G_matrix(const ModeField& u, const EquationOfState& eos, double u_O);

/// Extended Lane-Emden profile theta(r) on every polar node.
AxiField initial_from_profile(const GridPtr& grid, const RadialProfile& profile);

/// Solve u = g + G(u) with g fixed.
EquilibriumSolution solve_equilibrium(const CentrifugalField& g, const EquationOfState& eos,
                                      double u_O, const AxiField& init,
                                      const SolverOptions& opt = {});
/// Solve u = B(j, u) + G(u) for an angular momentum law.
EquilibriumSolution solve_equilibrium(const RotationLaw& law, const EquationOfState& eos,
                                      const ScaleSet& scale, const AxiField& init,
                                      const SolverOptions& opt = {});

/// Root of r -> u(r, zeta) beyond r0. Throws NoSignChange.
double free_boundary_at(const ModeField& u, double zeta, double r0);
/// R(zeta_j) on the polar nodes.
std::vector<double> free_boundary(const ModeField& u, double r0);
std::vector<double> free_boundary(const AxiField& u, double r0);

AdmissibilityFlags check_admissibility(const ModeField& u, double r0);
AdmissibilityFlags check_admissibility(const AxiField& u, double r0);

/// Smallest singular value of I - D G(u), with D_u B added for a j law.
HLReport hl_certificate(const ModeField& u, const EquationOfState& eos, const ScaleSet& scale,
                        const RotationLaw* law = nullptr);
HLReport hl_certificate(const AxiField& u, const EquationOfState& eos, double u_O);
/// Smallest singular value of a dense matrix, per mode block when it is block diagonal.
HLReport sigma_min_report(const RowMatrix& J, int n_r, int n_modes);

/// ||D^-1 B D||_inf for the mode block of D G(u), with D = diag(psi) over r > 0.
double weighted_block_norm(const ModeField& u, const EquationOfState& eos, double u_O, int mode,
                           std::span<const double> psi);

/// Smallest |grad u| over the free boundary curve.
double boundary_gradient_min(const ModeField& u, std::span<const double> R);

/// Solves in sequence, each warm-started from the previous solution. Throws
/// SolverError carrying the failing beta; `partial` then holds the solved prefix.
std::vector<EquilibriumSolution> continuation_in_beta(
    const std::vector<double>& schedule, const EquationOfState& eos, double u_O,
    const AxiField& init, const SolverOptions& opt = {},
    std::vector<EquilibriumSolution>* partial = nullptr);

}  // namespace rotstar
