#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/equilibrium.hpp"
#include "rotstar/rotation.hpp"

namespace rotstar {

enum class Command { LaneEmden, Solve, Oblateness, MassCurve, KernelCheck, HLCheck };

std::string command_name(Command c);

struct EosConfig {
    std::string kind = "polytrope";  ///< polytrope | white-dwarf
    std::optional<double> nu;
    std::optional<double> gamma;
    double A = 1.0;
    double B = 1.0;  ///< white dwarf only
    double c = 1.0;  ///< white dwarf only
    double u_O = 1.0;
    double G = 1.0;
};

struct RotationConfig {
    std::string kind = "none";  ///< none | constant | differential | angular-momentum
    std::optional<double> beta;
    std::optional<double> omega;
    std::vector<double> varpi_samples, omega_samples;
    std::vector<double> m_samples, j_samples, dj_samples;
};

struct GridConfig {
    int n_r = 256;
    int n_zeta = 32;
    int l_max = 8;
    double r_inf = 0.0;  ///< 0 selects 1.5 xi1
};

struct SolverConfig {
    double tol = 1e-10;
    int max_iter = 50;
    double damping = 0.5;
    double hl_threshold = 1e-3;
    bool newton = true;
    bool check_hl = true;
    std::vector<double> beta_schedule;
};

struct MassConfig {
    double rho_bar = 1.0;
    std::vector<double> omega2_schedule{0.0, 1e-3, 2e-3, 4e-3, 8e-3};
    double bracket_factor = 1.5;
    double rel_tol = 1e-9;
};

struct OblatenessConfig {
    std::vector<double> betas{1e-4, 3e-4, 1e-3};
};

struct OutputConfig {
    std::string prefix;
    bool json = true;
    bool csv = true;
};

struct RunConfig {
    Command command = Command::LaneEmden;
    EosConfig eos;
    RotationConfig rotation;
    GridConfig grid;
    SolverConfig solver;
    MassConfig mass;
    OblatenessConfig oblateness;
    OutputConfig output;
};

/// Parses INI (sections and key = value, lists comma separated) or JSON (one
/// object per section). The format is picked from the extension, then from the
/// first non-blank character. Unknown sections or keys and out-of-range values
/// throw ConfigError naming the field.
RunConfig parse_config(const std::string& text, const std::string& name = "config.ini");
RunConfig load_config(const std::string& path);

/// Fully defaulted configuration as canonical JSON text (sorted keys, 17 digits).
std::string canonical_config(const RunConfig& cfg);

EquationOfState make_eos(const EosConfig& c);
SolverOptions make_solver_options(const SolverConfig& c);
/// Constant laws given by beta are converted with the scale. Throws ConfigError.
RotationLaw make_rotation_law(const RotationConfig& c, const EquationOfState& eos,
                              const ScaleSet& scale);

}  // namespace rotstar
